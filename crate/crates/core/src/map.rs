//! Self-maps T: X → X.

use crate::error::{ContractaError, Result};
use crate::expr::{Expr, Var, Vars};
use crate::space::{Domain, Point};

/// Number of grid points used for the closure audit at construction.
const CLOSURE_AUDIT_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinMap {
    Identity,
    /// x ↦ c·x
    Scale(f64),
    /// x/3 on [0, 1/2], x/3 + 1/4 on (1/2, 3/4]
    PiecewiseLeader,
    /// Index successor k ↦ k + 1 on an enumerated domain.
    Successor,
}

/// Either a builtin or an expression. On interval domains expressions use `x`;
/// on enumerated domains they map the index `k` to the index of the image.
#[derive(Debug, Clone)]
pub enum MapSpec {
    Builtin(BuiltinMap),
    Expr(Expr),
}

impl MapSpec {
    pub fn parse(text: &str, domain: &Domain) -> Result<Self> {
        let var = if domain.is_enumerated() { Var::K } else { Var::X };
        Ok(MapSpec::Expr(Expr::parse_in(text, &[var])?))
    }

    pub fn describe(&self) -> String {
        match self {
            MapSpec::Builtin(BuiltinMap::Identity) => "x".into(),
            MapSpec::Builtin(BuiltinMap::Scale(c)) => format!("{c} * x"),
            MapSpec::Builtin(BuiltinMap::PiecewiseLeader) => "piecewise(x <= 1/2 : x/3 ; x/3 + 1/4)".into(),
            MapSpec::Builtin(BuiltinMap::Successor) => "k + 1".into(),
            MapSpec::Expr(e) => e.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfMap {
    pub spec: MapSpec,
    pub domain: Domain,
}

impl SelfMap {
    /// Builds the map and audits T(x) ∈ X over a grid of the domain. Enumerated
    /// domains are audited on their leading indices, short of the cap.
    pub fn new(spec: MapSpec, domain: Domain) -> Result<Self> {
        if let MapSpec::Builtin(BuiltinMap::Successor) = spec {
            if !domain.is_enumerated() {
                return Err(ContractaError::argument("the successor map needs an enumerated domain"));
            }
        }
        let map = SelfMap { spec, domain };
        let grid = match map.domain.capacity() {
            None => map.domain.grid(CLOSURE_AUDIT_POINTS)?,
            Some(n) => map.domain.grid(CLOSURE_AUDIT_POINTS.min(n.saturating_sub(1)).max(1))?,
        };
        for (k, p) in grid.iter().enumerate() {
            map.apply(p).map_err(|e| match e {
                ContractaError::Closure { from, value, domain, .. } => ContractaError::Closure {
                    index: k,
                    from,
                    value,
                    domain,
                },
                other => other,
            })?;
        }
        Ok(map)
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        match p.index {
            Some(k) => {
                let image = match &self.spec {
                    MapSpec::Builtin(BuiltinMap::Successor) => (k + 1) as f64,
                    MapSpec::Builtin(BuiltinMap::Identity) => k as f64,
                    MapSpec::Builtin(other) => {
                        return Err(ContractaError::argument(format!("{other:?} is not an index map")))
                    }
                    MapSpec::Expr(e) => e.eval(&Vars::k(k as f64))?,
                };
                let in_range = image >= 0.0 && image.fract() == 0.0 && self.domain.capacity().is_some_and(|n| image < n as f64);
                if !in_range {
                    return Err(self.escaped(p.value, image));
                }
                self.domain.point_at(image as usize)
            }
            None => {
                let x = p.value;
                let image = match &self.spec {
                    MapSpec::Builtin(BuiltinMap::Identity) => x,
                    MapSpec::Builtin(BuiltinMap::Scale(c)) => c * x,
                    MapSpec::Builtin(BuiltinMap::PiecewiseLeader) => {
                        if x <= 1.0 / 2.0 {
                            x / 3.0
                        } else {
                            x / 3.0 + 1.0 / 4.0
                        }
                    }
                    MapSpec::Builtin(BuiltinMap::Successor) => {
                        return Err(ContractaError::argument("the successor map needs an enumerated domain"))
                    }
                    MapSpec::Expr(e) => e.eval(&Vars::x(x))?,
                };
                self.domain.point(image).map_err(|_| self.escaped(x, image))
            }
        }
    }

    /// Tʳ(p).
    pub fn iterate(&self, p: &Point, r: usize) -> Result<Point> {
        let mut cur = *p;
        for _ in 0..r {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    fn escaped(&self, from: f64, value: f64) -> ContractaError {
        ContractaError::Closure {
            index: 0,
            from,
            value,
            domain: self.domain.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_leader_branches() {
        let map = SelfMap::new(
            MapSpec::Builtin(BuiltinMap::PiecewiseLeader),
            Domain::interval(0.0, 0.75).unwrap(),
        )
        .unwrap();
        assert_eq!(map.apply(&Point::real(0.75)).unwrap().value, 0.5);
        assert_eq!(map.apply(&Point::real(0.5)).unwrap().value, 0.5 / 3.0);
    }

    #[test]
    fn closure_audit_rejects_escaping_maps() {
        let err = SelfMap::new(MapSpec::parse("x + 0.5", &Domain::interval(0.0, 1.0).unwrap()).unwrap(), Domain::interval(0.0, 1.0).unwrap())
            .unwrap_err();
        match err {
            ContractaError::Closure { index, value, .. } => {
                assert_eq!(index, 501);
                assert!(value > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn successor_shifts_harmonic_points() {
        let domain = Domain::harmonic(100).unwrap();
        let map = SelfMap::new(MapSpec::Builtin(BuiltinMap::Successor), domain.clone()).unwrap();
        let h1 = domain.point(1.0).unwrap();
        assert_eq!(map.apply(&h1).unwrap().value, 1.5);
        assert!((map.iterate(&h1, 2).unwrap().value - 11.0 / 6.0).abs() < 1e-15);
        let last = domain.point_at(99).unwrap();
        assert!(matches!(map.apply(&last), Err(ContractaError::Closure { .. })));
    }

    #[test]
    fn index_expressions_must_be_integral() {
        let domain = Domain::harmonic(100).unwrap();
        let err = SelfMap::new(MapSpec::parse("k / 2", &domain).unwrap(), domain).unwrap_err();
        assert!(matches!(err, ContractaError::Closure { index: 1, .. }));
    }
}
