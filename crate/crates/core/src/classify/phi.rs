use rayon::prelude::*;

use super::{
    select_witness, ClassName, ClassVerdict, FunctionWitness, PairTable, PairWitness, VerdictParams, VerdictStatus,
    Witness,
};
use crate::error::{ContractaError, Result};
use crate::expr::{Expr, Var, Vars};
use crate::map::SelfMap;
use crate::space::{BMetricSpace, SampleSet};

/// Iterates of φ must fall below this after `iter_depth` steps.
pub const PHI_DECAY_BOUND: f64 = 1e-3;
pub const DEFAULT_ITER_DEPTH: usize = 2000;
const DEFAULT_AUDIT_POINTS: usize = 256;
// The semicontinuity window (t, t + τ_semi] is halved this many times and the
// last window is sampled at SEMI_PROBES points.
const SEMI_HALVINGS: i32 = 20;
const SEMI_PROBES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum AuditGrid {
    Explicit(Vec<f64>),
    /// n equispaced points in (0, D], D the largest sampled distance.
    Uniform(usize),
}

/// A comparison function φ(t).
#[derive(Debug, Clone)]
pub struct PhiSpec {
    pub expr: Expr,
    pub grid: AuditGrid,
}

impl PhiSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(PhiSpec {
            expr: Expr::parse_in(text, &[Var::T])?,
            grid: AuditGrid::Uniform(DEFAULT_AUDIT_POINTS),
        })
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        check_audit_grid(&grid)?;
        self.grid = AuditGrid::Explicit(grid);
        Ok(self)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.expr.eval(&Vars::t(t))?)
    }

    pub(crate) fn audit_points(&self, d_max: f64) -> Result<Vec<f64>> {
        resolve_grid(&self.grid, d_max)
    }
}

pub(crate) fn check_audit_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(ContractaError::argument("audit grid is empty"));
    }
    if grid[0] <= 0.0 || !grid.iter().all(|t| t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ContractaError::argument(
            "audit grid must be positive, finite and strictly increasing",
        ));
    }
    Ok(())
}

pub(crate) fn resolve_grid(grid: &AuditGrid, d_max: f64) -> Result<Vec<f64>> {
    match grid {
        AuditGrid::Explicit(g) => {
            check_audit_grid(g)?;
            Ok(g.clone())
        }
        AuditGrid::Uniform(n) => {
            if *n == 0 {
                return Err(ContractaError::argument("audit grid is empty"));
            }
            let top = if d_max > 0.0 && d_max.is_finite() { d_max } else { 1.0 };
            Ok((1..=*n).map(|i| top * i as f64 / *n as f64).collect())
        }
    }
}

fn audit_failure(function: &str, property: &str, t: f64, value: f64, reference: f64) -> Witness {
    Witness::FunctionAudit(FunctionWitness {
        function: function.into(),
        property: property.into(),
        t,
        value,
        reference,
    })
}

/// First grid point where φ(t) < t or φ(t) ≥ 0 fails.
fn audit_below_identity(phi: &PhiSpec, grid: &[f64]) -> Result<Option<Witness>> {
    for &t in grid {
        let v = phi.eval(t)?;
        if v < 0.0 {
            return Ok(Some(audit_failure("phi", "phi(t) >= 0", t, v, 0.0)));
        }
        if v >= t {
            return Ok(Some(audit_failure("phi", "phi(t) < t", t, v, t)));
        }
    }
    Ok(None)
}

fn largest(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Δ(Tx,Ty) ≤ φ(Δ(x,y)) + τ on the samples. Pairs at distance 0 are skipped.
fn pair_inequality(
    mut verdict: ClassVerdict,
    table: &PairTable<'_>,
    after: &[f64],
    bound: impl Fn(f64) -> Result<f64> + Sync,
    tau: f64,
) -> Result<ClassVerdict> {
    let bounds: Vec<Option<f64>> = table
        .before
        .par_iter()
        .map(|&d| if d > 0.0 { bound(d).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;
    let margins = bounds.iter().zip(after).filter_map(|(b, d1)| b.map(|b| b - d1));
    verdict.worst_margin = margins.reduce(f64::min);
    let violations = bounds
        .iter()
        .zip(after)
        .enumerate()
        .filter_map(|(k, (b, d1))| b.filter(|b| *d1 > b + tau).map(|b| (k, d1 - b)));
    if let Some(k) = select_witness(table.samples, violations, tau) {
        let (x, y) = table.pair(k);
        verdict.status = VerdictStatus::Falsified;
        verdict.witness = Some(Witness::Pair(PairWitness {
            x,
            y,
            epsilon: None,
            delta: None,
            r: 1,
            d_before: table.before[k],
            d_after: after[k],
            bound: bounds[k].expect("violations have a bound"),
        }));
    } else {
        verdict.status = VerdictStatus::CertifiedOnSamples;
    }
    Ok(verdict)
}

fn params(table: &PairTable<'_>, phi: &PhiSpec) -> VerdictParams {
    VerdictParams {
        samples: table.samples.describe(),
        function: Some(phi.expr.to_string()),
        ..Default::default()
    }
}

/// Audits φ(t) < t, monotonicity and φ^iter_depth(t) ≤ [`PHI_DECAY_BOUND`] on the
/// audit grid, then Δ(Tx,Ty) ≤ φ(Δ(x,y)) + τ on the samples.
pub fn check_matkowski(
    space: &BMetricSpace,
    map: &SelfMap,
    phi: &PhiSpec,
    samples: &SampleSet,
    iter_depth: usize,
) -> Result<ClassVerdict> {
    let table = PairTable::new(space, map, samples, 1)?;
    let after = table.after(space, 1)?;
    matkowski_from(&table, &after, phi, iter_depth, space.tau_eq)
}

pub(crate) fn matkowski_from(
    table: &PairTable<'_>,
    after: &[f64],
    phi: &PhiSpec,
    iter_depth: usize,
    tau: f64,
) -> Result<ClassVerdict> {
    let grid = phi.audit_points(largest(&table.before))?;
    let mut verdict = ClassVerdict::new(ClassName::Matkowski, VerdictStatus::Falsified, params(table, phi));
    if let Some(w) = audit_below_identity(phi, &grid)? {
        verdict.witness = Some(w);
        return Ok(verdict);
    }
    let mut prev = phi.eval(grid[0])?;
    for &t in &grid[1..] {
        let v = phi.eval(t)?;
        if v < prev - tau {
            verdict.witness = Some(audit_failure("phi", "nondecreasing", t, v, prev));
            return Ok(verdict);
        }
        prev = v;
    }
    for &t in &grid {
        let mut v = t;
        for _ in 0..iter_depth {
            if v <= PHI_DECAY_BOUND {
                break;
            }
            v = phi.eval(v)?;
        }
        if v > PHI_DECAY_BOUND {
            verdict.witness = Some(audit_failure("phi", "iterates decay", t, v, PHI_DECAY_BOUND));
            return Ok(verdict);
        }
    }
    pair_inequality(verdict, table, after, |d| phi.eval(d), tau)
}

/// Audits φ(t) < t and right upper semicontinuity on the audit grid, then
/// Δ(Tx,Ty) ≤ φ(Δ(x,y)) + τ on the samples. The semicontinuity audit compares φ(t)
/// with the largest value seen just right of t, in a window far inside τ_semi.
pub fn check_boyd_wong(
    space: &BMetricSpace,
    map: &SelfMap,
    phi: &PhiSpec,
    samples: &SampleSet,
    tau_semi: f64,
) -> Result<ClassVerdict> {
    let table = PairTable::new(space, map, samples, 1)?;
    let after = table.after(space, 1)?;
    boyd_wong_from(&table, &after, phi, tau_semi, space.tau_eq)
}

pub(crate) fn boyd_wong_from(
    table: &PairTable<'_>,
    after: &[f64],
    phi: &PhiSpec,
    tau_semi: f64,
    tau: f64,
) -> Result<ClassVerdict> {
    let grid = phi.audit_points(largest(&table.before))?;
    let mut verdict = ClassVerdict::new(ClassName::BoydWong, VerdictStatus::Falsified, params(table, phi));
    if let Some(w) = audit_below_identity(phi, &grid)? {
        verdict.witness = Some(w);
        return Ok(verdict);
    }
    let window = tau_semi * 2f64.powi(-SEMI_HALVINGS);
    for &t in &grid {
        let at = phi.eval(t)?;
        let mut right = f64::NEG_INFINITY;
        for i in 1..=SEMI_PROBES {
            right = right.max(phi.eval(t + window * i as f64 / SEMI_PROBES as f64)?);
        }
        if right > at + tau_semi {
            verdict.witness = Some(audit_failure("phi", "right upper semicontinuous", t, right, at));
            return Ok(verdict);
        }
    }
    pair_inequality(verdict, table, after, |d| phi.eval(d), tau)
}

pub(crate) fn geraghty_pairs(
    verdict: ClassVerdict,
    table: &PairTable<'_>,
    after: &[f64],
    alpha_bound: impl Fn(f64) -> Result<f64> + Sync,
    tau: f64,
) -> Result<ClassVerdict> {
    pair_inequality(verdict, table, after, alpha_bound, tau)
}
