use serde::{Deserialize, Serialize};

use super::phi::geraghty_pairs;
use super::{ClassName, ClassVerdict, PairTable, SequenceWitness, VerdictParams, VerdictStatus, Witness};
use crate::error::{ContractaError, Result};
use crate::expr::{Expr, Var, Vars};
use crate::map::SelfMap;
use crate::space::{BMetricSpace, SampleSet};

pub const DEFAULT_S_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeraghtyVariant {
    /// Limit condition over all sequences.
    TypeI,
    /// Limit condition over decreasing sequences.
    TypeII,
}

/// α(t) with values in [0, 1).
#[derive(Debug, Clone)]
pub struct AlphaSpec {
    pub expr: Expr,
    pub variant: GeraghtyVariant,
    /// α(s) ≥ 1 − tau_lim counts as α → 1.
    pub tau_lim: f64,
    /// A probe ending above this has not gone to 0.
    pub s_floor: f64,
}

impl AlphaSpec {
    pub fn parse(text: &str, variant: GeraghtyVariant) -> Result<Self> {
        Ok(AlphaSpec {
            expr: Expr::parse_in(text, &[Var::T])?,
            variant,
            tau_lim: 1e-3,
            s_floor: DEFAULT_S_FLOOR,
        })
    }

    pub fn with_tau_lim(mut self, tau_lim: f64) -> Self {
        self.tau_lim = tau_lim;
        self
    }

    /// α(t), with a range error outside [0, 1).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let value = self.expr.eval(&Vars::t(t))?;
        if (0.0..1.0).contains(&value) {
            Ok(value)
        } else {
            Err(ContractaError::AlphaRange { t, value })
        }
    }
}

/// D/n for n = 1..=1000 and D·2⁻ⁿ for n = 0..=60, both decreasing to 0.
pub fn default_probe_sequences(d_max: f64) -> Vec<Vec<f64>> {
    let d = if d_max > 0.0 && d_max.is_finite() { d_max } else { 1.0 };
    vec![
        (1..=1000).map(|n| d / n as f64).collect(),
        (0..=60).map(|n| d * 2f64.powi(-n)).collect(),
    ]
}

/// Audits the limit condition on each probe sequence, then checks
/// Δ(Tx,Ty) ≤ α(Δ(x,y))·Δ(x,y) + τ on the samples. A probe fails the audit when its
/// last term has α within tau_lim of 1 while the term itself is still above s_floor.
pub fn check_geraghty(
    space: &BMetricSpace,
    map: &SelfMap,
    alpha: &AlphaSpec,
    samples: &SampleSet,
    probe_sequences: &[Vec<f64>],
) -> Result<ClassVerdict> {
    let table = PairTable::new(space, map, samples, 1)?;
    let after = table.after(space, 1)?;
    geraghty_from(&table, &after, alpha, probe_sequences, space.tau_eq)
}

pub(crate) fn geraghty_from(
    table: &PairTable<'_>,
    after: &[f64],
    alpha: &AlphaSpec,
    probe_sequences: &[Vec<f64>],
    tau: f64,
) -> Result<ClassVerdict> {
    let class = match alpha.variant {
        GeraghtyVariant::TypeI => ClassName::GeraghtyI,
        GeraghtyVariant::TypeII => ClassName::GeraghtyIi,
    };
    let params = VerdictParams {
        samples: table.samples.describe(),
        function: Some(alpha.expr.to_string()),
        ..Default::default()
    };
    let mut verdict = ClassVerdict::new(class, VerdictStatus::Falsified, params);

    for (p, seq) in probe_sequences.iter().enumerate() {
        if seq.is_empty() || seq.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(ContractaError::argument(format!(
                "probe sequence {p} must be non-empty and positive"
            )));
        }
        if alpha.variant == GeraghtyVariant::TypeII && seq.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ContractaError::argument(format!(
                "probe sequence {p} is not decreasing, as type II requires"
            )));
        }
        let mut last = 0.0;
        for &s in seq {
            last = alpha.eval(s)?;
        }
        let n = seq.len() - 1;
        if last >= 1.0 - alpha.tau_lim && seq[n] > alpha.s_floor {
            verdict.witness = Some(Witness::Sequence(SequenceWitness {
                probe: p,
                n,
                s_n: seq[n],
                alpha: last,
            }));
            return Ok(verdict);
        }
    }
    geraghty_pairs(verdict, table, after, |d| Ok(alpha.eval(d)? * d), tau)
}
