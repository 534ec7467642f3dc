//! A small expression language for maps, distances, and control functions.
//!
//! Grammar (standard precedence, `+ - * /` left-associative, `^` right-associative,
//! unary minus binds looser than `^` so `-x^2` is `-(x^2)`):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | var | call | piecewise | "(" expr ")"
//! call    := ("abs" | "exp") "(" expr ")" | ("min" | "max") "(" expr ("," expr)+ ")"
//! piecewise := "piecewise" "(" (cond ":" expr ";")+ expr ")"
//! cond    := expr ("<=" | "<" | ">=" | ">" | "≤" | "≥") expr
//! var     := "x" | "y" | "t" | "k"
//! ```
//!
//! `piecewise(c1 : v1 ; c2 : v2 ; v3)` picks the first branch whose condition holds and
//! falls back to the last value. Conditions compare computed values exactly.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    ZeroToNegativePower,
    NonFinite,
    UnboundVariable,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind:?} in `{subexpression}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpression: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    T,
    K,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::K => "k",
        }
    }
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vars {
    slots: [Option<f64>; 4],
}

impl Vars {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.slots[var as usize] = Some(value);
        self
    }

    pub fn x(value: f64) -> Self {
        Self::new().with(Var::X, value)
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self::new().with(Var::X, x).with(Var::Y, y)
    }

    pub fn t(value: f64) -> Self {
        Self::new().with(Var::T, value)
    }

    pub fn k(value: f64) -> Self {
        Self::new().with(Var::K, value)
    }

    fn get(&self, var: Var) -> Option<f64> {
        self.slots[var as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Exp,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cond {
    pub op: CmpOp,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Piecewise {
        branches: Vec<(Cond, Expr)>,
        otherwise: Box<Expr>,
    },
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: text.len(),
        };
        let expr = parser.expr()?;
        if let Some((tok, at)) = parser.peek_with_pos() {
            return Err(ParseError {
                position: at,
                message: format!("unexpected trailing token {tok}"),
            });
        }
        Ok(expr)
    }

    /// Parses and rejects any variable outside `allowed`.
    pub fn parse_in(text: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
        let expr = Expr::parse(text)?;
        let mut used = Vec::new();
        expr.collect_vars(&mut used);
        if let Some(bad) = used.iter().find(|v| !allowed.contains(v)) {
            let names: Vec<_> = allowed.iter().map(|v| v.name()).collect();
            return Err(ParseError {
                position: text.find(bad.name()).unwrap_or(0),
                message: format!(
                    "variable `{}` not allowed here (expected one of: {})",
                    bad.name(),
                    names.join(", ")
                ),
            });
        }
        Ok(expr)
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut used = Vec::new();
        self.collect_vars(&mut used);
        used.sort();
        used.dedup();
        used
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                for (c, v) in branches {
                    c.lhs.collect_vars(out);
                    c.rhs.collect_vars(out);
                    v.collect_vars(out);
                }
                otherwise.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, vars: &Vars) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => vars.get(*var).ok_or_else(|| self.fail(EvalErrorKind::UnboundVariable))?,
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(vars)?;
                let b = b.eval(vars)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.fail(EvalErrorKind::DivisionByZero));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(self.fail(EvalErrorKind::ZeroToNegativePower));
                        }
                        pow(a, b)
                    }
                }
            }
            Expr::Call(func, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(a.eval(vars)?);
                }
                match func {
                    Func::Abs => values[0].abs(),
                    Func::Exp => values[0].exp(),
                    Func::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
                    Func::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                for (cond, value) in branches {
                    let lhs = cond.lhs.eval(vars)?;
                    let rhs = cond.rhs.eval(vars)?;
                    if cond.op.holds(lhs, rhs) {
                        return value.eval(vars);
                    }
                }
                otherwise.eval(vars)?
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.fail(EvalErrorKind::NonFinite))
        }
    }

    fn fail(&self, kind: EvalErrorKind) -> EvalError {
        EvalError {
            kind,
            subexpression: self.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }
}

// Integer exponents go through powi so that `(x - y)^2` is a plain product.
fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => {
                if e.precedence() <= 3 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                // Left operand needs parens when looser; right operand also when equal,
                // except for right-associative `^`.
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (a.precedence() <= p, b.precedence() < p && b.precedence() != 3)
                } else {
                    (a.precedence() < p, b.precedence() <= p)
                };
                fmt_operand(f, a, left_paren)?;
                write!(f, " {} ", op.symbol())?;
                fmt_operand(f, b, right_paren)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                f.write_str("piecewise(")?;
                for (cond, value) in branches {
                    write!(f, "{} {} {} : {} ; ", cond.lhs, cond.op.symbol(), cond.rhs, value)?;
                }
                write!(f, "{otherwise})")
            }
        }
    }
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    Cmp(CmpOp),
    LParen,
    RParen,
    Comma,
    Colon,
    Semi,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Op(c) => write!(f, "`{c}`"),
            Token::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Colon => f.write_str("`:`"),
            Token::Semi => f.write_str("`;`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut end = i;
            let mut seen_exp = false;
            while let Some(&(j, d)) = chars.peek() {
                let is_sign_after_exp =
                    (d == '-' || d == '+') && seen_exp && matches!(text[..j].chars().last(), Some('e' | 'E'));
                if d.is_ascii_digit() || d == '.' || is_sign_after_exp {
                    end = j + d.len_utf8();
                    chars.next();
                } else if (d == 'e' || d == 'E') && !seen_exp {
                    // Only an exponent when followed by a digit or a signed digit.
                    let rest = &text[j + 1..];
                    let mut it = rest.chars();
                    let ok = match it.next() {
                        Some(n) if n.is_ascii_digit() => true,
                        Some('+' | '-') => it.next().is_some_and(|n| n.is_ascii_digit()),
                        _ => false,
                    };
                    if !ok {
                        break;
                    }
                    seen_exp = true;
                    end = j + 1;
                    chars.next();
                } else {
                    break;
                }
            }
            let literal = &text[i..end];
            let value: f64 = literal.parse().map_err(|_| ParseError {
                position: i,
                message: format!("malformed number `{literal}`"),
            })?;
            out.push((Token::Num(value), i));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((Token::Ident(text[i..end].to_string()), i));
            continue;
        }
        chars.next();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            '−' => Token::Op('-'),
            '(' => Token::LParen,
            ')' => Token::RParen,
            ',' => Token::Comma,
            ':' => Token::Colon,
            ';' => Token::Semi,
            '≤' => Token::Cmp(CmpOp::Le),
            '≥' => Token::Cmp(CmpOp::Ge),
            '<' | '>' => {
                let eq = chars.peek().is_some_and(|&(_, d)| d == '=');
                if eq {
                    chars.next();
                }
                Token::Cmp(match (c, eq) {
                    ('<', true) => CmpOp::Le,
                    ('<', false) => CmpOp::Lt,
                    ('>', true) => CmpOp::Ge,
                    _ => CmpOp::Gt,
                })
            }
            other => {
                return Err(ParseError {
                    position: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, i));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_with_pos(&self) -> Option<(&Token, usize)> {
        self.tokens.get(self.pos).map(|(t, p)| (t, *p))
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.here(),
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected {want}, found {t}"))),
            None => Err(self.error(format!("expected {want}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        match tok {
            Token::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Token::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => {
                let at = self.here();
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "k" => Ok(Expr::Var(Var::K)),
                    "piecewise" => self.piecewise(),
                    "abs" | "exp" | "min" | "max" => {
                        let func = match name.as_str() {
                            "abs" => Func::Abs,
                            "exp" => Func::Exp,
                            "min" => Func::Min,
                            _ => Func::Max,
                        };
                        self.call(func, at)
                    }
                    other => Err(ParseError {
                        position: at,
                        message: format!("unknown identifier `{other}`"),
                    }),
                }
            }
            other => Err(self.error(format!("unexpected {other}"))),
        }
    }

    fn call(&mut self, func: Func, at: usize) -> Result<Expr, ParseError> {
        self.expect(Token::LParen)?;
        let mut args = vec![self.expr()?];
        while let Some(Token::Comma) = self.peek() {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(Token::RParen)?;
        let arity_ok = match func {
            Func::Abs | Func::Exp => args.len() == 1,
            Func::Min | Func::Max => args.len() >= 2,
        };
        if !arity_ok {
            return Err(ParseError {
                position: at,
                message: format!("wrong number of arguments to `{}`", func.name()),
            });
        }
        Ok(Expr::Call(func, args))
    }

    fn piecewise(&mut self) -> Result<Expr, ParseError> {
        self.expect(Token::LParen)?;
        let mut branches = Vec::new();
        loop {
            let lhs = self.expr()?;
            match self.peek().cloned() {
                Some(Token::Cmp(op)) => {
                    self.pos += 1;
                    let rhs = self.expr()?;
                    self.expect(Token::Colon)?;
                    let value = self.expr()?;
                    self.expect(Token::Semi)?;
                    branches.push((Cond { op, lhs, rhs }, value));
                }
                Some(Token::RParen) if !branches.is_empty() => {
                    self.pos += 1;
                    return Ok(Expr::Piecewise {
                        branches,
                        otherwise: Box::new(lhs),
                    });
                }
                Some(Token::RParen) => {
                    return Err(self.error("piecewise needs at least one `cond : value ;` branch"))
                }
                Some(t) => return Err(self.error(format!("expected comparison or `)`, found {t}"))),
                None => return Err(self.error("unterminated piecewise")),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, vars: Vars) -> f64 {
        Expr::parse(text).unwrap().eval(&vars).unwrap()
    }

    #[test]
    fn arithmetic() {
        assert!((eval("abs(x - y)", Vars::xy(0.3, 0.7)) - 0.4).abs() < 1e-15);
        assert_eq!(eval("(x - y)^2", Vars::xy(0.0, 2.0)), 4.0);
        assert_eq!(eval("1 - 2 - 3", Vars::new()), -4.0);
        assert_eq!(eval("8 / 4 / 2", Vars::new()), 1.0);
        assert_eq!(eval("2^3^2", Vars::new()), 512.0);
        assert_eq!(eval("-x^2", Vars::x(3.0)), -9.0);
        assert_eq!(eval("2^-1", Vars::new()), 0.5);
        assert_eq!(eval("1e-3 * 1000", Vars::new()), 1.0);
        assert_eq!(eval("min(x, 1, 0.5)", Vars::x(2.0)), 0.5);
        assert_eq!(eval("max(x, 1)", Vars::x(2.0)), 2.0);
        assert_eq!(eval("exp(0)", Vars::new()), 1.0);
    }

    #[test]
    fn piecewise_branches() {
        let leader = "piecewise(x <= 1/2 : x/3 ; x/3 + 1/4)";
        assert_eq!(eval(leader, Vars::x(0.75)), 0.5);
        assert_eq!(eval(leader, Vars::x(0.5)), 0.5 / 3.0);
        let three = "piecewise(t < 1 : 0 ; t ≤ 2 : 1 ; 2)";
        assert_eq!(eval(three, Vars::t(0.5)), 0.0);
        assert_eq!(eval(three, Vars::t(2.0)), 1.0);
        assert_eq!(eval(three, Vars::t(2.5)), 2.0);
    }

    #[test]
    fn domain_errors_name_subexpression() {
        let err = Expr::parse("1 + x / (y - y)").unwrap().eval(&Vars::xy(1.0, 2.0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.subexpression, "x / (y - y)");

        let err = Expr::parse("x^-1").unwrap().eval(&Vars::x(0.0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::ZeroToNegativePower);

        let err = Expr::parse("(0 - 1)^0.5").unwrap().eval(&Vars::new()).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NonFinite);

        let err = Expr::parse("x + y").unwrap().eval(&Vars::x(1.0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::UnboundVariable);
        assert_eq!(err.subexpression, "y");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = Expr::parse("x + * 2").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("abs(x, y)").is_err());
        assert!(Expr::parse("(x").is_err());
        assert!(Expr::parse("x 2").is_err());
        assert!(Expr::parse("piecewise(x)").is_err());
        assert!(Expr::parse_in("x + t", &[Var::X]).is_err());
        assert!(Expr::parse_in("x / 2", &[Var::X]).is_ok());
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for text in [
            "piecewise(x <= 1/2 : x/3 ; x/3 + 1/4)",
            "abs(x - y) / 2",
            "(x - y)^2",
            "-(x - 1) * -2",
            "2^-x",
            "(2^3)^2",
            "a",
        ] {
            let Ok(e) = Expr::parse(text) else { continue };
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }
}
