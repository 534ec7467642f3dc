//! One-dimensional b-metric spaces: domains, points, distances.

mod axioms;
mod sample;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ContractaError, Result};
use crate::expr::{Expr, Var, Vars};

pub use axioms::{audit_triangle, estimate_s, thin, triples_from_points, verify_axioms, TRIANGLE_POINTS, AxiomCheck, AxiomReport, Triple, TripleViolation};
pub use sample::{SampleSet, SamplePair, Sampler, SamplingStrategy};

/// Default equality tolerance for comparisons against exact inequalities.
pub const TAU_EQ: f64 = 1e-12;

/// Default cap on the number of points of an enumerated domain.
pub const DEFAULT_N_MAX: usize = 1_000_000;

/// A point of a domain. Points of enumerated domains remember their index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl Point {
    pub fn real(value: f64) -> Self {
        Point { value, index: None }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(k) => write!(f, "{}[#{k}]", self.value),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Rule producing the k-th point of an enumerated domain.
#[derive(Debug, Clone)]
pub enum Generator {
    /// k ↦ H_{k+1} = 1 + 1/2 + … + 1/(k+1).
    Harmonic,
    /// Expression in the index variable `k`.
    Expr(Expr),
}

impl Generator {
    fn describe(&self) -> String {
        match self {
            Generator::Harmonic => "harmonic".to_string(),
            Generator::Expr(e) => e.to_string(),
        }
    }

    fn table(&self, n_max: usize) -> Result<Vec<f64>> {
        match self {
            Generator::Harmonic => {
                let mut sum = 0.0;
                Ok((1..=n_max)
                    .map(|n| {
                        sum += 1.0 / n as f64;
                        sum
                    })
                    .collect())
            }
            Generator::Expr(e) => (0..n_max)
                .map(|k| e.eval(&Vars::k(k as f64)).map_err(ContractaError::from))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Enumeration {
    generator: Generator,
    values: Arc<[f64]>,
    // Indices sorted by value; None when `values` is already strictly increasing.
    order: Option<Arc<[usize]>>,
}

#[derive(Debug, Clone)]
enum DomainKind {
    Interval { lo: f64, hi: f64 },
    Enumerated(Enumeration),
}

/// The underlying set X: a closed interval or an enumerated real sequence.
#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(ContractaError::argument(format!(
                "interval bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Domain {
            kind: DomainKind::Interval { lo, hi },
        })
    }

    /// Builds the enumeration 0..n_max, rejecting generators that repeat a value.
    pub fn enumerated(generator: Generator, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(ContractaError::argument("enumerated domain needs n_max >= 1"));
        }
        let values = generator.table(n_max)?;
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        let order = if increasing {
            None
        } else {
            let mut idx: Vec<usize> = (0..n_max).collect();
            idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            if let Some(w) = idx.windows(2).find(|w| values[w[0]] == values[w[1]]) {
                return Err(ContractaError::argument(format!(
                    "generator `{}` is not injective: indices {} and {} both give {}",
                    generator.describe(),
                    w[0].min(w[1]),
                    w[0].max(w[1]),
                    values[w[0]]
                )));
            }
            Some(Arc::from(idx))
        };
        Ok(Domain {
            kind: DomainKind::Enumerated(Enumeration {
                generator,
                values: Arc::from(values),
                order,
            }),
        })
    }

    pub fn harmonic(n_max: usize) -> Result<Self> {
        Domain::enumerated(Generator::Harmonic, n_max)
    }

    pub fn is_enumerated(&self) -> bool {
        matches!(self.kind, DomainKind::Enumerated(_))
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DomainKind::Interval { lo, hi } => Some((*lo, *hi)),
            DomainKind::Enumerated(_) => None,
        }
    }

    /// Number of points of an enumerated domain.
    pub fn capacity(&self) -> Option<usize> {
        match &self.kind {
            DomainKind::Interval { .. } => None,
            DomainKind::Enumerated(e) => Some(e.values.len()),
        }
    }

    /// The k-th point of an enumerated domain.
    pub fn point_at(&self, k: usize) -> Result<Point> {
        match &self.kind {
            DomainKind::Enumerated(e) => e
                .values
                .get(k)
                .map(|&value| Point { value, index: Some(k) })
                .ok_or_else(|| ContractaError::argument(format!("index {k} beyond cap {}", e.values.len()))),
            DomainKind::Interval { .. } => Err(ContractaError::argument("indexed access on an interval domain")),
        }
    }

    /// Resolves a real value to a point of the domain. Enumerated lookups accept a
    /// relative mismatch of at most `TAU_EQ`.
    pub fn point(&self, value: f64) -> Result<Point> {
        match &self.kind {
            DomainKind::Interval { lo, hi } => {
                if value >= *lo && value <= *hi {
                    Ok(Point::real(value))
                } else {
                    Err(self.outside(value))
                }
            }
            DomainKind::Enumerated(e) => {
                let at = |i: usize| match &e.order {
                    Some(order) => order[i],
                    None => i,
                };
                let n = e.values.len();
                let pos = partition_point(n, |i| e.values[at(i)] < value);
                let close = |i: usize| {
                    let v = e.values[at(i)];
                    (v - value).abs() <= TAU_EQ * value.abs().max(1.0)
                };
                [pos, pos.wrapping_sub(1)]
                    .into_iter()
                    .filter(|&i| i < n && close(i))
                    .min_by(|&a, &b| {
                        let da = (e.values[at(a)] - value).abs();
                        let db = (e.values[at(b)] - value).abs();
                        da.total_cmp(&db)
                    })
                    .map(|i| {
                        let k = at(i);
                        Point {
                            value: e.values[k],
                            index: Some(k),
                        }
                    })
                    .ok_or_else(|| self.outside(value))
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (&self.kind, p.index) {
            (DomainKind::Interval { lo, hi }, None) => p.value >= *lo && p.value <= *hi,
            (DomainKind::Enumerated(e), Some(k)) => e.values.get(k) == Some(&p.value),
            _ => false,
        }
    }

    pub(crate) fn check(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(self.outside(p.value))
        }
    }

    pub(crate) fn outside(&self, value: f64) -> ContractaError {
        ContractaError::Domain {
            value,
            domain: self.to_string(),
        }
    }

    /// `count` equispaced points for intervals (endpoints included), the first `count`
    /// points for enumerated domains.
    pub fn grid(&self, count: usize) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(ContractaError::argument("grid needs at least one point"));
        }
        match &self.kind {
            DomainKind::Interval { lo, hi } => Ok(equispaced(*lo, *hi, count).into_iter().map(Point::real).collect()),
            DomainKind::Enumerated(e) => {
                if count > e.values.len() {
                    return Err(ContractaError::argument(format!(
                        "grid of {count} points exceeds enumerated-domain capacity {}",
                        e.values.len()
                    )));
                }
                (0..count).map(|k| self.point_at(k)).collect()
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DomainKind::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            DomainKind::Enumerated(e) => write!(f, "{{{} : k < {}}}", e.generator.describe(), e.values.len()),
        }
    }
}

fn partition_point(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `lo + (hi - lo) * i / (n - 1)` with the last point pinned to `hi`.
pub(crate) fn equispaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let span = hi - lo;
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + span * i as f64 / denom })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinDistance {
    /// c·|x − y|
    ScaledAbs(f64),
    /// (x − y)²
    SquaredDiff,
}

#[derive(Debug, Clone)]
pub enum DistanceSpec {
    Builtin(BuiltinDistance),
    Expr(Expr),
}

impl DistanceSpec {
    pub fn abs() -> Self {
        DistanceSpec::Builtin(BuiltinDistance::ScaledAbs(1.0))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(DistanceSpec::Expr(Expr::parse_in(text, &[Var::X, Var::Y])?))
    }

    /// Evaluates in the given argument order, without symmetrization.
    pub fn eval_raw(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            DistanceSpec::Builtin(BuiltinDistance::ScaledAbs(c)) => Ok(c * (x - y).abs()),
            DistanceSpec::Builtin(BuiltinDistance::SquaredDiff) => Ok((x - y) * (x - y)),
            DistanceSpec::Expr(e) => Ok(e.eval(&Vars::xy(x, y))?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DistanceSpec::Builtin(BuiltinDistance::ScaledAbs(c)) if *c == 1.0 => "abs(x - y)".into(),
            DistanceSpec::Builtin(BuiltinDistance::ScaledAbs(c)) => format!("{c} * abs(x - y)"),
            DistanceSpec::Builtin(BuiltinDistance::SquaredDiff) => "(x - y)^2".into(),
            DistanceSpec::Expr(e) => e.to_string(),
        }
    }
}

/// A b-metric space (X, Δ) with a claimed relaxed-triangle coefficient s ≥ 1.
#[derive(Debug, Clone)]
pub struct BMetricSpace {
    pub domain: Domain,
    pub distance: DistanceSpec,
    pub s_claimed: f64,
    /// When false the triangle audit is skipped and only limits matter.
    pub triangle_enforced: bool,
    pub tau_eq: f64,
}

impl BMetricSpace {
    pub fn new(domain: Domain, distance: DistanceSpec, s_claimed: f64) -> Result<Self> {
        if !(s_claimed >= 1.0 && s_claimed.is_finite()) {
            return Err(ContractaError::argument(format!("s_claimed must be a finite real >= 1, got {s_claimed}")));
        }
        Ok(BMetricSpace {
            domain,
            distance,
            s_claimed,
            triangle_enforced: true,
            tau_eq: TAU_EQ,
        })
    }

    pub fn with_triangle(mut self, enforced: bool) -> Self {
        self.triangle_enforced = enforced;
        self
    }

    pub fn with_tau_eq(mut self, tau_eq: f64) -> Self {
        self.tau_eq = tau_eq;
        self
    }

    /// Δ(x, y). Arguments are put in canonical order first, so the result is
    /// symmetric bit for bit whatever the underlying expression.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.domain.check(x)?;
        self.domain.check(y)?;
        self.distance_unchecked(x, y)
    }

    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> Result<f64> {
        let (a, b) = if x.value <= y.value { (x.value, y.value) } else { (y.value, x.value) };
        self.distance.eval_raw(a, b)
    }

    /// Largest pairwise distance in `points`: the smallest M for which the set is
    /// bounded by M.
    pub fn subset_diameter(&self, points: &[Point]) -> Result<f64> {
        let mut diam: f64 = 0.0;
        for (i, x) in points.iter().enumerate() {
            for y in &points[i + 1..] {
                diam = diam.max(self.distance_unchecked(x, y)?);
            }
        }
        Ok(diam)
    }

    /// Whether Δ(x, y) ≤ m for all x, y in `points`.
    pub fn is_bounded_by(&self, points: &[Point], m: f64) -> Result<bool> {
        Ok(self.subset_diameter(points)? <= m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let unit = BMetricSpace::new(Domain::interval(0.0, 1.0).unwrap(), DistanceSpec::abs(), 1.0).unwrap();
        let p = Point::real(0.3);
        assert_eq!(unit.distance(&p, &p).unwrap(), 0.0);

        let window = BMetricSpace::new(
            Domain::interval(-2.0, 2.0).unwrap(),
            DistanceSpec::Builtin(BuiltinDistance::SquaredDiff),
            2.0,
        )
        .unwrap();
        assert_eq!(window.distance(&Point::real(0.0), &Point::real(2.0)).unwrap(), 4.0);

        let harmonic = BMetricSpace::new(
            Domain::harmonic(100).unwrap(),
            DistanceSpec::Builtin(BuiltinDistance::ScaledAbs(0.5)),
            1.0,
        )
        .unwrap();
        let h1 = harmonic.domain.point(1.0).unwrap();
        let h2 = harmonic.domain.point(1.5).unwrap();
        assert_eq!(h1.index, Some(0));
        assert_eq!(harmonic.distance(&h1, &h2).unwrap(), 0.25);
    }

    #[test]
    fn outside_points_are_rejected() {
        let unit = BMetricSpace::new(Domain::interval(0.0, 1.0).unwrap(), DistanceSpec::abs(), 1.0).unwrap();
        let err = unit.distance(&Point::real(1.5), &Point::real(0.0)).unwrap_err();
        assert!(matches!(err, ContractaError::Domain { .. }));
        let h = Domain::harmonic(10).unwrap();
        assert!(h.point(1.2).is_err());
        assert!(h.point_at(10).is_err());
    }

    #[test]
    fn expression_errors_surface() {
        let space = BMetricSpace::new(
            Domain::interval(0.0, 1.0).unwrap(),
            DistanceSpec::parse("abs(x - y) / (x - 0.5)").unwrap(),
            1.0,
        )
        .unwrap();
        let err = space.distance(&Point::real(0.5), &Point::real(0.7)).unwrap_err();
        match err {
            ContractaError::Eval(e) => assert_eq!(e.subexpression, "abs(x - y) / (x - 0.5)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn enumerated_generator_must_be_injective() {
        let gen = Generator::Expr(Expr::parse_in("(k - 2)^2", &[Var::K]).unwrap());
        assert!(Domain::enumerated(gen, 5).is_err());
        let gen = Generator::Expr(Expr::parse_in("-k", &[Var::K]).unwrap());
        let d = Domain::enumerated(gen, 5).unwrap();
        assert_eq!(d.point(-3.0).unwrap().index, Some(3));
    }

    #[test]
    fn invalid_constructions() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::interval(0.0, f64::INFINITY).is_err());
        assert!(BMetricSpace::new(Domain::interval(0.0, 1.0).unwrap(), DistanceSpec::abs(), 0.5).is_err());
    }

    #[test]
    fn harmonic_points() {
        let h = Domain::harmonic(10).unwrap();
        let expected = [1.0, 1.5, 1.0 + 0.5 + 1.0 / 3.0, 1.0 + 0.5 + 1.0 / 3.0 + 0.25];
        for (k, v) in expected.iter().enumerate() {
            assert!((h.point_at(k).unwrap().value - v).abs() < 1e-15);
        }
    }

    #[test]
    fn bounded_subsets() {
        let unit = BMetricSpace::new(Domain::interval(0.0, 1.0).unwrap(), DistanceSpec::abs(), 1.0).unwrap();
        let pts: Vec<Point> = [0.1, 0.4, 0.9].map(Point::real).to_vec();
        assert!((unit.subset_diameter(&pts).unwrap() - 0.8).abs() < 1e-15);
        assert!(unit.is_bounded_by(&pts, 0.81).unwrap());
        assert!(!unit.is_bounded_by(&pts, 0.5).unwrap());
    }
}
