//! Finite truncations of σ(m,n,p) = inf_k Δ(T^{m(k)+p}x, T^{n(k)+p}x) and of its
//! infimum σ(p) and supremum θ(p) over a family of index pairs.
//!
//! The truncated σ(m,n,p) is a minimum over k < K, so it bounds the true infimum
//! from above. σ(p) over a finite family bounds the infimum over all pairs from
//! above and θ(p) bounds the supremum from below.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ContractaError, Result};
use crate::map::SelfMap;
use crate::orbit::picard;
use crate::space::{BMetricSpace, Point};

pub const DEFAULT_OFFSETS: [usize; 4] = [0, 1, 2, 3];
pub const DEFAULT_GAPS: [usize; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_K: usize = 30;
pub const DEFAULT_P_MAX: usize = 30;

const BIAS_NOTE: &str = "sigma_mnp is a minimum over k < K and bounds the infimum from above; \
sigma_p bounds the infimum over all index pairs from above; theta_p bounds the supremum from below";

/// One pair of index sequences (m, n).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Member {
    /// m(k) = k + offset, n(k) = k + offset + gap.
    Parametric { offset: usize, gap: usize },
    Table { m: Vec<usize>, n: Vec<usize> },
}

impl Member {
    pub fn indices(&self, k: usize) -> (usize, usize) {
        match self {
            Member::Parametric { offset, gap } => (k + offset, k + offset + gap),
            Member::Table { m, n } => (m[k], n[k]),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Member::Parametric { offset, gap } => format!("a={offset},g={gap}"),
            Member::Table { m, .. } => format!("table[{}]", m.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexFamily {
    pub members: Vec<Member>,
    /// Number of k values evaluated.
    pub k: usize,
}

impl IndexFamily {
    pub fn parametric(offsets: &[usize], gaps: &[usize], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(ContractaError::argument("truncation K must be >= 1"));
        }
        let members: Vec<Member> = offsets
            .iter()
            .flat_map(|&offset| gaps.iter().map(move |&gap| Member::Parametric { offset, gap }))
            .collect();
        if members.is_empty() {
            return Err(ContractaError::argument("index family is empty"));
        }
        Ok(IndexFamily { members, k })
    }

    pub fn default_family() -> Self {
        IndexFamily::parametric(&DEFAULT_OFFSETS, &DEFAULT_GAPS, DEFAULT_K).expect("defaults are valid")
    }

    /// Adds a finite table; both sequences must be strictly increasing with m ≤ n
    /// and hold at least K entries.
    pub fn with_table(mut self, m: Vec<usize>, n: Vec<usize>) -> Result<Self> {
        if m.len() != n.len() || m.len() < self.k {
            return Err(ContractaError::argument(format!(
                "index table needs two sequences of equal length >= K = {}",
                self.k
            )));
        }
        let increasing = |s: &[usize]| s.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&m) || !increasing(&n) || m.iter().zip(&n).any(|(a, b)| a > b) {
            return Err(ContractaError::argument(
                "index table must be strictly increasing with m(k) <= n(k)",
            ));
        }
        self.members.push(Member::Table { m, n });
        Ok(self)
    }

    /// Largest orbit index needed for p ≤ p_max.
    pub fn max_index(&self, p_max: usize) -> usize {
        self.members
            .iter()
            .map(|m| m.indices(self.k - 1).1)
            .max()
            .unwrap_or(0)
            + p_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Limits {
    pub sigma: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    pub bias: String,
    pub base: Point,
    pub k: usize,
    pub p_max: usize,
    pub members: Vec<String>,
    /// sigma_mnp[member][p]
    pub sigma_mnp: Vec<Vec<f64>>,
    pub sigma_p: Vec<f64>,
    pub theta_p: Vec<f64>,
    /// θ(p+1) − σ(p); the squeeze holds where this is ≤ τ.
    pub squeeze_gaps: Vec<f64>,
    pub sigma_p_monotone: bool,
    pub theta_p_monotone: bool,
    pub member_monotone: bool,
    pub squeeze_holds: bool,
    pub limits: Limits,
}

fn check_budget(needed: usize, budget: usize) -> Result<()> {
    if needed > budget {
        return Err(ContractaError::argument(format!(
            "orbit index {needed} exceeds the iteration budget {budget}"
        )));
    }
    Ok(())
}

fn sigma_on_orbit(space: &BMetricSpace, orbit: &[Point], member: &Member, p: usize, k: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for kk in 0..k {
        let (m, n) = member.indices(kk);
        best = best.min(space.distance_unchecked(&orbit[m + p], &orbit[n + p])?);
    }
    Ok(best)
}

/// min over k < K of Δ(T^{m(k)+p}x, T^{n(k)+p}x).
pub fn sigma_mnp(
    space: &BMetricSpace,
    map: &SelfMap,
    x: &Point,
    member: &Member,
    p: usize,
    k: usize,
    budget: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(ContractaError::argument("truncation K must be >= 1"));
    }
    if let Member::Table { m, .. } = member {
        if m.len() < k {
            return Err(ContractaError::argument("index table shorter than K"));
        }
    }
    let needed = member.indices(k - 1).1 + p;
    check_budget(needed, budget)?;
    let orbit = picard(space, map, x, needed)?;
    sigma_on_orbit(space, &orbit.points, member, p, k)
}

fn nonincreasing(values: &[f64], tau: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tau)
}

/// σ(m,n,p), σ(p) and θ(p) for 0 ≤ p ≤ p_max, with the monotonicity and squeeze
/// flags evaluated at tolerance `space.tau_eq`. Flags are evidence, not errors.
pub fn probe(
    space: &BMetricSpace,
    map: &SelfMap,
    x: &Point,
    family: &IndexFamily,
    p_max: usize,
    budget: usize,
) -> Result<SigmaReport> {
    let needed = family.max_index(p_max);
    check_budget(needed, budget)?;
    let orbit = picard(space, map, x, needed)?;
    let tau = space.tau_eq;

    let sigma_mnp: Vec<Vec<f64>> = family
        .members
        .par_iter()
        .map(|member| {
            (0..=p_max)
                .map(|p| sigma_on_orbit(space, &orbit.points, member, p, family.k))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let column = |p: usize| sigma_mnp.iter().map(move |row| row[p]);
    let sigma_p: Vec<f64> = (0..=p_max).map(|p| column(p).fold(f64::INFINITY, f64::min)).collect();
    let theta_p: Vec<f64> = (0..=p_max).map(|p| column(p).fold(f64::NEG_INFINITY, f64::max)).collect();
    let squeeze_gaps: Vec<f64> = (0..p_max).map(|p| theta_p[p + 1] - sigma_p[p]).collect();

    Ok(SigmaReport {
        bias: BIAS_NOTE.into(),
        base: *x,
        k: family.k,
        p_max,
        members: family.members.iter().map(Member::label).collect(),
        sigma_p_monotone: nonincreasing(&sigma_p, tau),
        theta_p_monotone: nonincreasing(&theta_p, tau),
        member_monotone: sigma_mnp.iter().all(|row| nonincreasing(row, tau)),
        squeeze_holds: squeeze_gaps.iter().all(|g| *g <= tau),
        limits: Limits {
            sigma: sigma_p[p_max],
            theta: theta_p[p_max],
        },
        sigma_mnp,
        sigma_p,
        theta_p,
        squeeze_gaps,
    })
}
