use serde::Serialize;

use super::geraghty::{default_probe_sequences, geraghty_from, AlphaSpec};
use super::leader::{check_r_max, leader_from, LeaderHint};
use super::meir_keeler::meir_keeler_from;
use super::nonexpansive::nonexpansive_from;
use super::phi::{boyd_wong_from, matkowski_from, PhiSpec, DEFAULT_ITER_DEPTH};
use super::{
    check_boyd_wong, check_epsilons, check_matkowski, check_meir_keeler, check_nonexpansive, ClassName, ClassVerdict,
    DeltaSchedule, PairTable, Tolerances, VerdictStatus, Witness,
};
use crate::error::Result;
use crate::map::SelfMap;
use crate::orbit::{detect_unbounded, UnboundedReport, DEFAULT_MAX_ITER};
use crate::space::{BMetricSpace, Point, SampleSet, Sampler};

pub const DEFAULT_EPSILONS: [f64; 6] = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0];
pub const DEFAULT_R_MAX: usize = 10;
pub const DEFAULT_ORBIT_THRESHOLD: f64 = 2.0;
pub const DEFAULT_WINDOW_DOUBLINGS: usize = 4;

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub sampler: Sampler,
    pub tolerances: Tolerances,
    pub epsilons: Vec<f64>,
    pub delta_schedule: DeltaSchedule,
    pub r_max: usize,
    /// Upper limit on r_max.
    pub iteration_budget: usize,
    pub phi: Option<PhiSpec>,
    pub iter_depth: usize,
    pub alpha: Option<AlphaSpec>,
    /// Defaults to [`default_probe_sequences`] scaled to the largest sampled distance.
    pub probe_sequences: Option<Vec<Vec<f64>>>,
    pub leader_hint: Option<LeaderHint>,
    /// Start of the orbit examined for unboundedness; the first grid point when absent.
    pub orbit_start: Option<Point>,
    pub orbit_threshold: f64,
    pub window_doublings: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            sampler: Sampler::default(),
            tolerances: Tolerances::default(),
            epsilons: DEFAULT_EPSILONS.to_vec(),
            delta_schedule: DeltaSchedule::default(),
            r_max: DEFAULT_R_MAX,
            iteration_budget: DEFAULT_MAX_ITER,
            phi: None,
            iter_depth: DEFAULT_ITER_DEPTH,
            alpha: None,
            probe_sequences: None,
            leader_hint: None,
            orbit_start: None,
            orbit_threshold: DEFAULT_ORBIT_THRESHOLD,
            window_doublings: DEFAULT_WINDOW_DOUBLINGS,
        }
    }
}

/// The classes of the hierarchy BW → MK → N.Le → Le, Ma → N.Le.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HierarchyClass {
    BoydWong,
    MeirKeeler,
    Matkowski,
    #[serde(rename = "n_le")]
    NonexpansiveLeader,
    Leader,
}

impl HierarchyClass {
    pub const ORDER: [HierarchyClass; 5] = [
        HierarchyClass::BoydWong,
        HierarchyClass::MeirKeeler,
        HierarchyClass::Matkowski,
        HierarchyClass::NonexpansiveLeader,
        HierarchyClass::Leader,
    ];

    /// Inclusions (smaller, larger).
    pub const EDGES: [(HierarchyClass, HierarchyClass); 4] = [
        (HierarchyClass::BoydWong, HierarchyClass::MeirKeeler),
        (HierarchyClass::MeirKeeler, HierarchyClass::NonexpansiveLeader),
        (HierarchyClass::Matkowski, HierarchyClass::NonexpansiveLeader),
        (HierarchyClass::NonexpansiveLeader, HierarchyClass::Leader),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HierarchyClass::BoydWong => "boyd_wong",
            HierarchyClass::MeirKeeler => "meir_keeler",
            HierarchyClass::Matkowski => "matkowski",
            HierarchyClass::NonexpansiveLeader => "n_le",
            HierarchyClass::Leader => "leader",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub class: HierarchyClass,
    pub status: VerdictStatus,
    /// How the status was reached.
    pub basis: String,
}

/// A smaller class certified while a larger one is falsified on the same samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyFault {
    pub smaller: HierarchyClass,
    pub larger: HierarchyClass,
    pub detail: String,
    /// Status of the smaller class re-checked on the larger class's witness pair.
    pub recheck: Option<VerdictStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyPlacement {
    pub samples: String,
    pub placements: Vec<Placement>,
    /// Direct checker outputs.
    pub verdicts: Vec<ClassVerdict>,
    pub orbit: UnboundedReport,
    pub faults: Vec<ConsistencyFault>,
}

impl HierarchyPlacement {
    pub fn placement(&self, class: HierarchyClass) -> &Placement {
        self.placements
            .iter()
            .find(|p| p.class == class)
            .expect("every class is placed")
    }

    pub fn verdict(&self, class: ClassName) -> Option<&ClassVerdict> {
        self.verdicts.iter().find(|v| v.class == class)
    }

    /// Status by name: a hierarchy class, a checker class, or "orbit".
    pub fn status_of(&self, name: &str) -> Option<&'static str> {
        if name == "orbit" {
            return Some(match self.orbit.verdict {
                crate::orbit::Boundedness::BoundedSoFar => "bounded_so_far",
                crate::orbit::Boundedness::Diverging => "diverging",
            });
        }
        if let Some(p) = self.placements.iter().find(|p| p.class.as_str() == name) {
            return Some(p.status.as_str());
        }
        self.verdicts
            .iter()
            .find(|v| v.class.as_str() == name)
            .map(|v| v.status.as_str())
    }
}

/// Runs every checker on one shared sample, places the map in the hierarchy and
/// reports, without repairing, any placement that contradicts an inclusion.
pub fn classify(space: &BMetricSpace, map: &SelfMap, config: &ClassifyConfig) -> Result<HierarchyPlacement> {
    check_epsilons(&config.epsilons)?;
    config.delta_schedule.validate()?;
    check_r_max(config.r_max, config.iteration_budget)?;
    let space = space.clone().with_tau_eq(config.tolerances.tau_eq);
    let tau = space.tau_eq;
    let samples = config.sampler.build(&space.domain)?;
    let table = PairTable::new(&space, map, &samples, config.r_max)?;
    let after = table.after(&space, 1)?;

    let nonexpansive = nonexpansive_from(&table, &after, tau);
    let meir_keeler = meir_keeler_from(&table, &after, &config.epsilons, &config.delta_schedule, tau);
    let leader = leader_from(
        &space,
        &table,
        &config.epsilons,
        &config.delta_schedule,
        config.r_max,
        config.leader_hint.as_ref(),
    )?;
    let matkowski = match &config.phi {
        Some(phi) => Some(matkowski_from(&table, &after, phi, config.iter_depth, tau)?),
        None => None,
    };
    let boyd_wong = match &config.phi {
        Some(phi) => Some(boyd_wong_from(&table, &after, phi, config.tolerances.tau_semi, tau)?),
        None => None,
    };
    let geraghty = match &config.alpha {
        Some(alpha) => {
            let alpha = alpha.clone().with_tau_lim(config.tolerances.tau_lim);
            let d_max = table.before.iter().copied().fold(0.0, f64::max);
            let probes = config
                .probe_sequences
                .clone()
                .unwrap_or_else(|| default_probe_sequences(d_max));
            Some(geraghty_from(&table, &after, &alpha, &probes, tau)?)
        }
        None => None,
    };

    let ne_falsified = nonexpansive.status == VerdictStatus::Falsified;
    let phi_class = |verdict: &Option<ClassVerdict>| match verdict {
        Some(v) => (v.status, "checked".to_string()),
        None if ne_falsified => (
            VerdictStatus::Falsified,
            "implied: the non-expansive witness violates every phi-contraction".to_string(),
        ),
        None => (VerdictStatus::Inconclusive, "no phi candidate supplied".to_string()),
    };
    let n_le = match (nonexpansive.status, leader.status) {
        (VerdictStatus::Falsified, _) | (_, VerdictStatus::Falsified) => VerdictStatus::Falsified,
        (VerdictStatus::CertifiedOnSamples, VerdictStatus::CertifiedOnSamples) => VerdictStatus::CertifiedOnSamples,
        _ => VerdictStatus::Inconclusive,
    };
    let (bw_status, bw_basis) = phi_class(&boyd_wong);
    let (ma_status, ma_basis) = phi_class(&matkowski);
    let placements = vec![
        Placement {
            class: HierarchyClass::BoydWong,
            status: bw_status,
            basis: bw_basis,
        },
        Placement {
            class: HierarchyClass::MeirKeeler,
            status: meir_keeler.status,
            basis: "checked".into(),
        },
        Placement {
            class: HierarchyClass::Matkowski,
            status: ma_status,
            basis: ma_basis,
        },
        Placement {
            class: HierarchyClass::NonexpansiveLeader,
            status: n_le,
            basis: format!(
                "nonexpansive {}, leader {}",
                nonexpansive.status.as_str(),
                leader.status.as_str()
            ),
        },
        Placement {
            class: HierarchyClass::Leader,
            status: leader.status,
            basis: "checked".into(),
        },
    ];

    let mut verdicts = vec![nonexpansive, meir_keeler, leader];
    verdicts.extend(matkowski);
    verdicts.extend(boyd_wong);
    verdicts.extend(geraghty);

    let status = |c: HierarchyClass| placements.iter().find(|p| p.class == c).map(|p| p.status);
    let mut faults = Vec::new();
    for (small, large) in HierarchyClass::EDGES {
        if status(small) != Some(VerdictStatus::CertifiedOnSamples) || status(large) != Some(VerdictStatus::Falsified) {
            continue;
        }
        let witness = falsifying_pair(&verdicts, large);
        let recheck = match witness {
            Some(w) => recheck(&space, map, config, small, w)?,
            None => None,
        };
        faults.push(ConsistencyFault {
            smaller: small,
            larger: large,
            detail: format!(
                "{} certified on samples while {} is falsified",
                small.as_str(),
                large.as_str()
            ),
            recheck,
        });
    }

    let start = match config.orbit_start {
        Some(p) => space.domain.point(p.value)?,
        None => space.domain.grid(1)?[0],
    };
    let orbit = detect_unbounded(&space, map, &start, config.orbit_threshold, config.window_doublings)?;

    Ok(HierarchyPlacement {
        samples: samples.describe(),
        placements,
        verdicts,
        orbit,
        faults,
    })
}

fn falsifying_pair(verdicts: &[ClassVerdict], class: HierarchyClass) -> Option<&super::PairWitness> {
    let names: &[ClassName] = match class {
        HierarchyClass::MeirKeeler => &[ClassName::MeirKeeler],
        HierarchyClass::NonexpansiveLeader => &[ClassName::Nonexpansive, ClassName::Leader],
        HierarchyClass::Leader => &[ClassName::Leader],
        HierarchyClass::BoydWong => &[ClassName::BoydWong],
        HierarchyClass::Matkowski => &[ClassName::Matkowski],
    };
    verdicts
        .iter()
        .filter(|v| names.contains(&v.class) && v.status == VerdictStatus::Falsified)
        .find_map(|v| v.witness.as_ref().and_then(Witness::as_pair))
}

fn recheck(
    space: &BMetricSpace,
    map: &SelfMap,
    config: &ClassifyConfig,
    class: HierarchyClass,
    w: &super::PairWitness,
) -> Result<Option<VerdictStatus>> {
    let samples = SampleSet::from_pairs(&[(w.x, w.y)]);
    let status = match class {
        HierarchyClass::BoydWong => match &config.phi {
            Some(phi) => check_boyd_wong(space, map, phi, &samples, config.tolerances.tau_semi)?.status,
            None => return Ok(None),
        },
        HierarchyClass::Matkowski => match &config.phi {
            Some(phi) => check_matkowski(space, map, phi, &samples, config.iter_depth)?.status,
            None => return Ok(None),
        },
        HierarchyClass::MeirKeeler => {
            let eps = w.epsilon.unwrap_or(w.d_before);
            if !(eps > 0.0) {
                return Ok(None);
            }
            check_meir_keeler(space, map, &[eps], &config.delta_schedule, &samples)?.status
        }
        HierarchyClass::NonexpansiveLeader => check_nonexpansive(space, map, &samples)?.status,
        HierarchyClass::Leader => return Ok(None),
    };
    Ok(Some(status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{BuiltinMap, MapSpec};
    use crate::space::{DistanceSpec, Domain};

    fn instance(lo: f64, hi: f64, map: BuiltinMap) -> (BMetricSpace, SelfMap) {
        let domain = Domain::interval(lo, hi).unwrap();
        let space = BMetricSpace::new(domain.clone(), DistanceSpec::abs(), 1.0).unwrap();
        (space, SelfMap::new(MapSpec::Builtin(map), domain).unwrap())
    }

    fn small_config() -> ClassifyConfig {
        ClassifyConfig {
            sampler: Sampler {
                count: 151,
                ..Sampler::default()
            },
            ..ClassifyConfig::default()
        }
    }

    #[test]
    fn banach_sits_in_every_class() {
        let (space, map) = instance(0.0, 1.0, BuiltinMap::Scale(0.5));
        let config = ClassifyConfig {
            phi: Some(PhiSpec::parse("t/2").unwrap()),
            alpha: Some(AlphaSpec::parse("1/2", super::super::GeraghtyVariant::TypeI).unwrap()),
            ..small_config()
        };
        let h = classify(&space, &map, &config).unwrap();
        for p in &h.placements {
            assert_eq!(p.status, VerdictStatus::CertifiedOnSamples, "{p:?}");
        }
        assert!(h.faults.is_empty());
        assert_eq!(h.status_of("geraghty_i"), Some("certified_on_samples"));
        assert_eq!(h.status_of("orbit"), Some("bounded_so_far"));
    }

    #[test]
    fn piecewise_is_leader_only() {
        let (space, map) = instance(0.0, 0.75, BuiltinMap::PiecewiseLeader);
        let config = ClassifyConfig {
            leader_hint: Some(LeaderHint {
                contraction: 3.0,
                jump: 0.25,
            }),
            ..small_config()
        };
        let h = classify(&space, &map, &config).unwrap();
        assert_eq!(h.placement(HierarchyClass::Leader).status, VerdictStatus::CertifiedOnSamples);
        assert_eq!(h.placement(HierarchyClass::NonexpansiveLeader).status, VerdictStatus::Falsified);
        for c in [HierarchyClass::BoydWong, HierarchyClass::Matkowski, HierarchyClass::MeirKeeler] {
            assert_eq!(h.placement(c).status, VerdictStatus::Falsified, "{c:?}");
        }
        assert!(h.faults.is_empty());
    }

    #[test]
    fn sparse_epsilons_expose_a_fault() {
        // A step map: large pairs contract, pairs across the step expand.
        let domain = Domain::interval(0.0, 1.0).unwrap();
        let space = BMetricSpace::new(domain.clone(), DistanceSpec::abs(), 1.0).unwrap();
        let map = SelfMap::new(MapSpec::parse("piecewise(x <= 0.5 : 0 ; 0.1)", &domain).unwrap(), domain).unwrap();
        let config = ClassifyConfig {
            epsilons: vec![0.5],
            ..small_config()
        };
        let h = classify(&space, &map, &config).unwrap();
        assert_eq!(h.placement(HierarchyClass::MeirKeeler).status, VerdictStatus::CertifiedOnSamples);
        assert_eq!(h.placement(HierarchyClass::NonexpansiveLeader).status, VerdictStatus::Falsified);
        assert_eq!(h.faults.len(), 1);
        let fault = &h.faults[0];
        assert_eq!((fault.smaller, fault.larger), (HierarchyClass::MeirKeeler, HierarchyClass::NonexpansiveLeader));
        assert_eq!(fault.recheck, Some(VerdictStatus::Falsified));
    }
}
