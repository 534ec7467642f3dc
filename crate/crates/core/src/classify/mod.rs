//! Sampling-based certification and falsification of contraction classes.
//!
//! A checker either certifies a class on the given samples, falsifies it with a
//! re-checkable [`Witness`], or reports that the samples cannot decide. Certification
//! is evidence only: a finer sample may still falsify.
//!
//! Witness choice is deterministic. Among violating pairs the most severe one wins;
//! severities within `tau_eq` of the maximum tie, and ties go to the pair living on
//! the coarsest grid resolution, then to the earliest pair in sample order.

mod geraghty;
mod hierarchy;
mod leader;
mod meir_keeler;
mod nonexpansive;
mod phi;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ContractaError, Result};
use crate::map::SelfMap;
use crate::space::{BMetricSpace, Point, SampleSet};

pub use geraghty::{check_geraghty, default_probe_sequences, AlphaSpec, GeraghtyVariant};
pub use hierarchy::{classify, ClassifyConfig, ConsistencyFault, HierarchyClass, HierarchyPlacement, Placement};
pub use leader::{check_leader, check_leader_hinted, LeaderHint};
pub use meir_keeler::check_meir_keeler;
pub use nonexpansive::check_nonexpansive;
pub use phi::{check_boyd_wong, check_matkowski, AuditGrid, PhiSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tau_eq: f64,
    /// Right-window width for the semicontinuity audit.
    pub tau_semi: f64,
    /// Band below 1 in which α counts as tending to 1.
    pub tau_lim: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_eq: 1e-12,
            tau_semi: 1e-6,
            tau_lim: 1e-3,
        }
    }
}

/// δ_i = start_factor · ε · ratio^i for i < steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaSchedule {
    pub start_factor: f64,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for DeltaSchedule {
    fn default() -> Self {
        DeltaSchedule {
            start_factor: 1.0,
            ratio: 0.5,
            steps: 40,
        }
    }
}

impl DeltaSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.start_factor > 0.0
            && self.start_factor.is_finite()
            && self.ratio > 0.0
            && self.ratio < 1.0
            && self.steps >= 1;
        if ok {
            Ok(())
        } else {
            Err(ContractaError::argument(
                "delta schedule needs start_factor > 0, 0 < ratio < 1 and steps >= 1",
            ))
        }
    }

    pub fn deltas(&self, eps: f64) -> impl Iterator<Item = f64> + '_ {
        let mut delta = self.start_factor * eps;
        (0..self.steps).map(move |_| {
            let d = delta;
            delta *= self.ratio;
            d
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassName {
    Nonexpansive,
    MeirKeeler,
    Leader,
    Matkowski,
    BoydWong,
    GeraghtyI,
    GeraghtyIi,
}

impl ClassName {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassName::Nonexpansive => "nonexpansive",
            ClassName::MeirKeeler => "meir_keeler",
            ClassName::Leader => "leader",
            ClassName::Matkowski => "matkowski",
            ClassName::BoydWong => "boyd_wong",
            ClassName::GeraghtyI => "geraghty_i",
            ClassName::GeraghtyIi => "geraghty_ii",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    CertifiedOnSamples,
    Falsified,
    Inconclusive,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::CertifiedOnSamples => "certified_on_samples",
            VerdictStatus::Falsified => "falsified",
            VerdictStatus::Inconclusive => "inconclusive",
        }
    }
}

/// A sampled pair together with the distances that decide a class condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWitness {
    pub x: Point,
    pub y: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Number of applications of T behind `d_after`.
    pub r: usize,
    /// Δ(x, y)
    pub d_before: f64,
    /// Δ(Tʳx, Tʳy)
    pub d_after: f64,
    /// The quantity `d_after` was compared with: Δ(x,y), ε, φ(Δ(x,y)) or α(Δ(x,y))·Δ(x,y).
    pub bound: f64,
}

impl PairWitness {
    /// Recomputes both distances; true when they match the stored values within `tau`.
    pub fn reproduces(&self, space: &BMetricSpace, map: &SelfMap, tau: f64) -> Result<bool> {
        let before = space.distance(&self.x, &self.y)?;
        let after = space.distance(&map.iterate(&self.x, self.r)?, &map.iterate(&self.y, self.r)?)?;
        Ok((before - self.d_before).abs() <= tau && (after - self.d_after).abs() <= tau)
    }

    pub fn ratio(&self) -> f64 {
        self.d_after / self.d_before
    }
}

/// A failed audit of φ or α at a single argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionWitness {
    pub function: String,
    pub property: String,
    pub t: f64,
    pub value: f64,
    pub reference: f64,
}

/// A probe sequence along which α approaches 1 while the sequence stays away from 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceWitness {
    pub probe: usize,
    pub n: usize,
    pub s_n: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Pair(PairWitness),
    FunctionAudit(FunctionWitness),
    Sequence(SequenceWitness),
}

impl Witness {
    pub fn as_pair(&self) -> Option<&PairWitness> {
        match self {
            Witness::Pair(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    Hint,
    Search,
}

/// Per-ε outcome of the ε-δ checkers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonOutcome {
    pub epsilon: f64,
    pub status: VerdictStatus,
    pub delta: Option<f64>,
    pub r: Option<usize>,
    pub source: Option<CertificateSource>,
}

/// What a checker was run with.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerdictParams {
    pub samples: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_schedule: Option<DeltaSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassVerdict {
    pub class: ClassName,
    pub status: VerdictStatus,
    pub witness: Option<Witness>,
    pub params: VerdictParams,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_epsilon: Vec<EpsilonOutcome>,
    /// Smallest slack of the pair inequality over the samples (negative on violation).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
}

impl ClassVerdict {
    fn new(class: ClassName, status: VerdictStatus, params: VerdictParams) -> Self {
        ClassVerdict {
            class,
            status,
            witness: None,
            params,
            per_epsilon: Vec::new(),
            worst_margin: None,
        }
    }
}

/// Distances of every sample pair before and after iterating the map.
pub(crate) struct PairTable<'a> {
    pub samples: &'a SampleSet,
    pub before: Vec<f64>,
    // iterates[r - 1][i] = Tʳ(points[i])
    iterates: Vec<Vec<Point>>,
}

impl<'a> PairTable<'a> {
    pub fn new(space: &BMetricSpace, map: &SelfMap, samples: &'a SampleSet, r_max: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(ContractaError::argument("empty sample set"));
        }
        for p in &samples.points {
            space.domain.check(p)?;
        }
        let before = samples
            .pairs
            .par_iter()
            .map(|p| space.distance_unchecked(&samples.points[p.i], &samples.points[p.j]))
            .collect::<Result<Vec<_>>>()?;
        let mut iterates: Vec<Vec<Point>> = Vec::with_capacity(r_max);
        for r in 0..r_max {
            let prev = if r == 0 { &samples.points } else { &iterates[r - 1] };
            let next = prev.par_iter().map(|p| map.apply(p)).collect::<Result<Vec<_>>>()?;
            iterates.push(next);
        }
        Ok(PairTable {
            samples,
            before,
            iterates,
        })
    }

    /// Δ(Tʳx, Tʳy) for every pair, 1 ≤ r ≤ r_max.
    pub fn after(&self, space: &BMetricSpace, r: usize) -> Result<Vec<f64>> {
        let images = &self.iterates[r - 1];
        self.samples
            .pairs
            .par_iter()
            .map(|p| space.distance_unchecked(&images[p.i], &images[p.j]))
            .collect()
    }

    pub fn pair(&self, k: usize) -> (Point, Point) {
        self.samples.pair(k)
    }
}

/// Picks the witness among `(pair index, severity)` candidates: maximal severity up
/// to `tau`, then coarsest grid resolution, then sample order.
pub(crate) fn select_witness(
    samples: &SampleSet,
    candidates: impl IntoIterator<Item = (usize, f64)>,
    tau: f64,
) -> Option<usize> {
    let candidates: Vec<(usize, f64)> = candidates.into_iter().collect();
    let top = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    candidates
        .iter()
        .filter(|c| c.1 >= top - tau || top.is_infinite() && c.1 == top)
        .min_by_key(|c| (samples.simplicity(c.0), c.0))
        .map(|c| c.0)
}

pub(crate) fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(ContractaError::argument("epsilon list is empty"));
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(ContractaError::argument(format!("epsilons must be positive, got {bad}")));
    }
    Ok(())
}
