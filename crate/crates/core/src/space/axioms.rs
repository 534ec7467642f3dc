//! Empirical audit of the b-metric axioms and of the coefficient s.

use rayon::prelude::*;
use serde::Serialize;

use super::{BMetricSpace, Point, SampleSet};
use crate::error::{ContractaError, Result};

pub type Triple = (Point, Point, Point);

/// The triangle audit in [`verify_axioms`] uses at most this many sample points.
pub const TRIANGLE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleViolation {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    /// Δ(x, y)
    pub lhs: f64,
    /// s·(Δ(x, z) + Δ(z, y))
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of one axiom over the sample. `worst` holds the offending points and
/// the two compared quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    pub worst: Option<(Vec<Point>, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub s_claimed: f64,
    pub self_zero: AxiomCheck,
    pub positivity: AxiomCheck,
    pub symmetry: AxiomCheck,
    /// Absent when the space does not enforce the relaxed triangle inequality.
    pub triangle: Option<AxiomCheck>,
    pub worst_triple: Option<TripleViolation>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.self_zero.passed
            && self.positivity.passed
            && self.symmetry.passed
            && self.triangle.as_ref().is_none_or(|t| t.passed)
    }
}

struct Tally {
    checked: usize,
    violations: usize,
    worst: Option<(f64, Vec<Point>, f64, f64)>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checked: 0,
            violations: 0,
            worst: None,
        }
    }

    fn record(&mut self, ok: bool, severity: f64, points: &[Point], lhs: f64, rhs: f64) {
        self.checked += 1;
        if ok {
            return;
        }
        self.violations += 1;
        if self.worst.as_ref().is_none_or(|w| severity > w.0) {
            self.worst = Some((severity, points.to_vec(), lhs, rhs));
        }
    }

    fn finish(self) -> AxiomCheck {
        AxiomCheck {
            passed: self.violations == 0,
            checked: self.checked,
            violations: self.violations,
            worst: self.worst.map(|(_, p, l, r)| (p, l, r)),
        }
    }
}

/// Audits self-distance, positivity, symmetry and (when enforced) the relaxed
/// triangle inequality with `s_claimed` on the sample. Triples range over the
/// sample points, thinned to [`TRIANGLE_POINTS`] evenly strided ones (first and
/// last kept) because the audit is cubic.
pub fn verify_axioms(space: &BMetricSpace, samples: &SampleSet) -> Result<AxiomReport> {
    if samples.is_empty() || samples.points.is_empty() {
        return Err(ContractaError::argument("verify_axioms needs a non-empty sample set"));
    }
    for p in &samples.points {
        space.domain.check(p)?;
    }
    let tau = space.tau_eq;

    let mut self_zero = Tally::new();
    for p in &samples.points {
        let d = space.distance_unchecked(p, p)?;
        self_zero.record(d.abs() <= tau, d.abs(), &[*p], d, tau);
    }

    let mut positivity = Tally::new();
    let mut symmetry = Tally::new();
    for (x, y) in samples.iter_pairs() {
        let d = space.distance_unchecked(&x, &y)?;
        let ok = if x.value == y.value { d >= 0.0 } else { d > 0.0 };
        positivity.record(ok, -d, &[x, y], d, 0.0);

        let forward = space.distance.eval_raw(x.value, y.value)?;
        let backward = space.distance.eval_raw(y.value, x.value)?;
        symmetry.record(forward == backward, (forward - backward).abs(), &[x, y], forward, backward);
    }

    let (triangle, worst_triple) = if space.triangle_enforced {
        let triples = triples_from_points(&thin(&samples.points, TRIANGLE_POINTS));
        let (check, worst) = audit_triangle(space, &triples)?;
        (Some(check), worst)
    } else {
        (None, None)
    };

    Ok(AxiomReport {
        s_claimed: space.s_claimed,
        self_zero: self_zero.finish(),
        positivity: positivity.finish(),
        symmetry: symmetry.finish(),
        triangle,
        worst_triple,
    })
}

/// Δ(x,y) ≤ s·(Δ(x,z) + Δ(z,y)) + τ on every triple. The worst triple is the one with
/// the largest ratio lhs/rhs; ties go to the earliest triple.
pub fn audit_triangle(space: &BMetricSpace, triples: &[Triple]) -> Result<(AxiomCheck, Option<TripleViolation>)> {
    let s = space.s_claimed;
    let tau = space.tau_eq;
    let evaluated: Vec<(f64, f64)> = triples
        .par_iter()
        .map(|(x, y, z)| {
            let lhs = space.distance_unchecked(x, y)?;
            let rhs = s * (space.distance_unchecked(x, z)? + space.distance_unchecked(z, y)?);
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;

    let mut violations = 0;
    let mut worst: Option<(usize, f64)> = None;
    for (k, &(lhs, rhs)) in evaluated.iter().enumerate() {
        if lhs <= rhs + tau {
            continue;
        }
        violations += 1;
        let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
        if worst.is_none_or(|(_, r)| ratio > r) {
            worst = Some((k, ratio));
        }
    }
    let worst_triple = worst.map(|(k, ratio)| {
        let (x, y, z) = triples[k];
        let (lhs, rhs) = evaluated[k];
        TripleViolation {
            x,
            y,
            z,
            lhs,
            rhs,
            ratio,
        }
    });
    let check = AxiomCheck {
        passed: violations == 0,
        checked: triples.len(),
        violations,
        worst: worst_triple.as_ref().map(|t| (vec![t.x, t.y, t.z], t.lhs, t.rhs)),
    };
    Ok((check, worst_triple))
}

/// Lower bound on the coefficient s: the largest Δ(x,y)/(Δ(x,z)+Δ(z,y)) seen, but
/// never below 1. Triples with a zero denominator are skipped.
pub fn estimate_s(space: &BMetricSpace, triples: &[Triple]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for (x, y, z) in triples {
        let denom = space.distance_unchecked(x, z)? + space.distance_unchecked(z, y)?;
        if denom == 0.0 {
            continue;
        }
        let ratio = space.distance_unchecked(x, y)? / denom;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.map(|b| b.max(1.0))
        .ok_or_else(|| ContractaError::argument("estimate_s: every triple had a zero denominator"))
}

/// At most `n` points of `points`, evenly strided, keeping both ends.
pub fn thin(points: &[Point], n: usize) -> Vec<Point> {
    let len = points.len();
    if len <= n {
        return points.to_vec();
    }
    if n < 2 {
        return points[..n].to_vec();
    }
    (0..n).map(|i| points[i * (len - 1) / (n - 1)]).collect()
}

/// All triples (x, y, z) with x before y in `points` and z anywhere.
pub fn triples_from_points(points: &[Point]) -> Vec<Triple> {
    let n = points.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2 * n);
    for i in 0..n {
        for j in i + 1..n {
            for z in points {
                out.push((points[i], points[j], *z));
            }
        }
    }
    out
}
