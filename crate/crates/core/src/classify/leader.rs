use serde::{Deserialize, Serialize};

use super::{
    check_epsilons, CertificateSource, ClassName, ClassVerdict, DeltaSchedule, EpsilonOutcome, PairTable,
    VerdictParams, VerdictStatus,
};
use crate::error::{ContractaError, Result};
use crate::map::SelfMap;
use crate::orbit::DEFAULT_MAX_ITER;
use crate::space::{BMetricSpace, SampleSet};

/// Closed-form (r, δ) candidate for maps that contract by a factor `contraction`
/// on each branch and jump by at most `jump` across branches: r is the least r
/// with jump / contraction^(r−1) < ε/2 and δ = (contraction^r / 2 − 1)·ε.
/// A hint is only a candidate; it is checked on the samples like any other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderHint {
    pub contraction: f64,
    pub jump: f64,
}

impl LeaderHint {
    pub fn candidate(&self, eps: f64) -> Option<(usize, f64)> {
        if !(self.contraction > 1.0 && self.jump >= 0.0) {
            return None;
        }
        let r = (1..=64).find(|&r| self.jump / self.contraction.powi(r as i32 - 1) < eps / 2.0)?;
        let delta = (self.contraction.powi(r as i32) / 2.0 - 1.0) * eps;
        (delta > 0.0).then_some((r, delta))
    }
}

/// For each ε, the first (r, δ) in r-ascending, δ-descending order such that every
/// sampled pair with Δ(x,y) < ε+δ has Δ(Tʳx,Tʳy) < ε − τ. Failure to find one is
/// inconclusive, never a falsification.
pub fn check_leader(
    space: &BMetricSpace,
    map: &SelfMap,
    epsilons: &[f64],
    schedule: &DeltaSchedule,
    r_max: usize,
    samples: &SampleSet,
) -> Result<ClassVerdict> {
    check_leader_hinted(space, map, epsilons, schedule, r_max, samples, None, DEFAULT_MAX_ITER)
}

/// As [`check_leader`], trying `hint` first for every ε.
#[allow(clippy::too_many_arguments)]
pub fn check_leader_hinted(
    space: &BMetricSpace,
    map: &SelfMap,
    epsilons: &[f64],
    schedule: &DeltaSchedule,
    r_max: usize,
    samples: &SampleSet,
    hint: Option<&LeaderHint>,
    budget: usize,
) -> Result<ClassVerdict> {
    check_r_max(r_max, budget)?;
    check_epsilons(epsilons)?;
    schedule.validate()?;
    let table = PairTable::new(space, map, samples, r_max)?;
    leader_from(space, &table, epsilons, schedule, r_max, hint)
}

pub(crate) fn check_r_max(r_max: usize, budget: usize) -> Result<()> {
    if r_max == 0 {
        return Err(ContractaError::argument("r_max must be >= 1"));
    }
    if r_max > budget {
        return Err(ContractaError::argument(format!(
            "r_max {r_max} exceeds the iteration budget {budget}"
        )));
    }
    Ok(())
}

struct AfterCache<'t, 'a> {
    space: &'t BMetricSpace,
    table: &'t PairTable<'a>,
    rows: Vec<Option<Vec<f64>>>,
}

impl AfterCache<'_, '_> {
    /// Smallest Δ(x,y) among pairs with Δ(Tʳx,Tʳy) ≥ ε − τ; (ε, δ, r) is sound iff ε + δ ≤ this.
    fn d_bad(&mut self, r: usize, eps: f64) -> Result<f64> {
        if self.rows[r - 1].is_none() {
            self.rows[r - 1] = Some(self.table.after(self.space, r)?);
        }
        let after = self.rows[r - 1].as_ref().expect("row filled above");
        let tau = self.space.tau_eq;
        Ok(self
            .table
            .before
            .iter()
            .zip(after)
            .filter(|(_, d_r)| **d_r >= eps - tau)
            .map(|(d, _)| *d)
            .fold(f64::INFINITY, f64::min))
    }
}

pub(crate) fn leader_from(
    space: &BMetricSpace,
    table: &PairTable<'_>,
    epsilons: &[f64],
    schedule: &DeltaSchedule,
    r_max: usize,
    hint: Option<&LeaderHint>,
) -> Result<ClassVerdict> {
    let params = VerdictParams {
        samples: table.samples.describe(),
        epsilons: epsilons.to_vec(),
        delta_schedule: Some(*schedule),
        r_max: Some(r_max),
        ..Default::default()
    };
    let mut verdict = ClassVerdict::new(ClassName::Leader, VerdictStatus::CertifiedOnSamples, params);
    let mut cache = AfterCache {
        space,
        table,
        rows: vec![None; r_max],
    };

    for &eps in epsilons {
        let mut found = None;
        if let Some((r, delta)) = hint.and_then(|h| h.candidate(eps)) {
            if r <= r_max && eps + delta <= cache.d_bad(r, eps)? {
                found = Some((r, delta, CertificateSource::Hint));
            }
        }
        if found.is_none() {
            for r in 1..=r_max {
                let d_bad = cache.d_bad(r, eps)?;
                if let Some(delta) = schedule.deltas(eps).find(|delta| eps + delta <= d_bad) {
                    found = Some((r, delta, CertificateSource::Search));
                    break;
                }
            }
        }
        verdict.per_epsilon.push(match found {
            Some((r, delta, source)) => EpsilonOutcome {
                epsilon: eps,
                status: VerdictStatus::CertifiedOnSamples,
                delta: Some(delta),
                r: Some(r),
                source: Some(source),
            },
            None => EpsilonOutcome {
                epsilon: eps,
                status: VerdictStatus::Inconclusive,
                delta: None,
                r: None,
                source: None,
            },
        });
    }
    if verdict.per_epsilon.iter().any(|o| o.status != VerdictStatus::CertifiedOnSamples) {
        verdict.status = VerdictStatus::Inconclusive;
    }
    Ok(verdict)
}
