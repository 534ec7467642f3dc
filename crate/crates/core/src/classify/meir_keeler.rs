use super::{
    check_epsilons, select_witness, CertificateSource, ClassName, ClassVerdict, DeltaSchedule, EpsilonOutcome,
    PairTable, PairWitness, VerdictParams, VerdictStatus, Witness,
};
use crate::error::Result;
use crate::map::SelfMap;
use crate::space::{BMetricSpace, SampleSet};

/// For each ε, the largest δ in the schedule such that every sampled pair with
/// ε ≤ Δ(x,y) < ε+δ has Δ(Tx,Ty) < ε − τ. A pair sitting at Δ(x,y) = ε (within τ)
/// with Δ(Tx,Ty) ≥ ε lies in every window, so it falsifies.
pub fn check_meir_keeler(
    space: &BMetricSpace,
    map: &SelfMap,
    epsilons: &[f64],
    schedule: &DeltaSchedule,
    samples: &SampleSet,
) -> Result<ClassVerdict> {
    check_epsilons(epsilons)?;
    schedule.validate()?;
    let table = PairTable::new(space, map, samples, 1)?;
    let after = table.after(space, 1)?;
    Ok(meir_keeler_from(&table, &after, epsilons, schedule, space.tau_eq))
}

pub(crate) fn meir_keeler_from(
    table: &PairTable<'_>,
    after: &[f64],
    epsilons: &[f64],
    schedule: &DeltaSchedule,
    tau: f64,
) -> ClassVerdict {
    let params = VerdictParams {
        samples: table.samples.describe(),
        epsilons: epsilons.to_vec(),
        delta_schedule: Some(*schedule),
        ..Default::default()
    };
    let mut verdict = ClassVerdict::new(ClassName::MeirKeeler, VerdictStatus::CertifiedOnSamples, params);
    let d = &table.before;

    for &eps in epsilons {
        // Smallest Δ(x,y) ≥ ε among pairs that would break the implication.
        let d_bad = d
            .iter()
            .zip(after)
            .filter(|(d, d1)| **d >= eps && **d1 >= eps - tau)
            .map(|(d, _)| *d)
            .fold(f64::INFINITY, f64::min);
        let delta = schedule.deltas(eps).find(|delta| eps + delta <= d_bad);
        let outcome = match delta {
            Some(delta) => {
                let occupied = d.iter().any(|d| *d >= eps && *d < eps + delta);
                EpsilonOutcome {
                    epsilon: eps,
                    status: if occupied {
                        VerdictStatus::CertifiedOnSamples
                    } else {
                        VerdictStatus::Inconclusive
                    },
                    delta: occupied.then_some(delta),
                    r: occupied.then_some(1),
                    source: occupied.then_some(CertificateSource::Search),
                }
            }
            None => {
                let boundary = d
                    .iter()
                    .zip(after)
                    .enumerate()
                    .filter(|(_, (d, d1))| (**d - eps).abs() <= tau && **d1 >= eps)
                    .map(|(k, (_, d1))| (k, d1 - eps));
                match select_witness(table.samples, boundary, tau) {
                    Some(k) => {
                        if verdict.witness.is_none() {
                            let (x, y) = table.pair(k);
                            verdict.witness = Some(Witness::Pair(PairWitness {
                                x,
                                y,
                                epsilon: Some(eps),
                                delta: None,
                                r: 1,
                                d_before: d[k],
                                d_after: after[k],
                                bound: eps,
                            }));
                        }
                        EpsilonOutcome {
                            epsilon: eps,
                            status: VerdictStatus::Falsified,
                            delta: None,
                            r: None,
                            source: None,
                        }
                    }
                    None => EpsilonOutcome {
                        epsilon: eps,
                        status: VerdictStatus::Inconclusive,
                        delta: None,
                        r: None,
                        source: None,
                    },
                }
            }
        };
        verdict.per_epsilon.push(outcome);
    }

    let statuses: Vec<VerdictStatus> = verdict.per_epsilon.iter().map(|o| o.status).collect();
    verdict.status = if statuses.contains(&VerdictStatus::Falsified) {
        VerdictStatus::Falsified
    } else if statuses.iter().all(|s| *s == VerdictStatus::CertifiedOnSamples) {
        VerdictStatus::CertifiedOnSamples
    } else {
        VerdictStatus::Inconclusive
    };
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{BuiltinMap, MapSpec};
    use crate::space::{Domain, DistanceSpec, Point};

    fn setup(lo: f64, hi: f64, map: BuiltinMap) -> (BMetricSpace, SelfMap) {
        let domain = Domain::interval(lo, hi).unwrap();
        let space = BMetricSpace::new(domain.clone(), DistanceSpec::abs(), 1.0).unwrap();
        (space, SelfMap::new(MapSpec::Builtin(map), domain).unwrap())
    }

    #[test]
    fn banach_is_certified() {
        let (space, map) = setup(0.0, 1.0, BuiltinMap::Scale(0.5));
        let samples = SampleSet::grid(&space.domain, 101).unwrap();
        let v = check_meir_keeler(&space, &map, &[0.1, 0.25], &DeltaSchedule::default(), &samples).unwrap();
        assert_eq!(v.status, VerdictStatus::CertifiedOnSamples);
        // δ = ε is exact in theory; grid pairs one ulp below 2ε can halve it.
        for o in &v.per_epsilon {
            assert!(o.delta.unwrap() >= o.epsilon / 2.0);
        }
    }

    #[test]
    fn boundary_pair_falsifies_piecewise() {
        let (space, map) = setup(0.0, 0.75, BuiltinMap::PiecewiseLeader);
        let samples = SampleSet::grid(&space.domain, 751).unwrap();
        let v = check_meir_keeler(&space, &map, &[0.25], &DeltaSchedule::default(), &samples).unwrap();
        assert_eq!(v.status, VerdictStatus::Falsified);
        let w = v.witness.as_ref().unwrap().as_pair().unwrap();
        assert_eq!((w.x.value, w.y.value), (0.5, 0.75));
        assert!((w.d_after - 1.0 / 3.0).abs() < 1e-15);
        assert!(w.reproduces(&space, &map, 1e-12).unwrap());
    }

    #[test]
    fn empty_window_is_inconclusive() {
        let (space, map) = setup(0.0, 1.0, BuiltinMap::Scale(0.5));
        let samples = SampleSet::from_pairs(&[(Point::real(0.0), Point::real(0.05))]);
        let v = check_meir_keeler(&space, &map, &[0.1], &DeltaSchedule::default(), &samples).unwrap();
        assert_eq!(v.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn empty_epsilon_list_is_an_argument_error() {
        let (space, map) = setup(0.0, 1.0, BuiltinMap::Scale(0.5));
        let samples = SampleSet::grid(&space.domain, 3).unwrap();
        assert!(check_meir_keeler(&space, &map, &[], &DeltaSchedule::default(), &samples).is_err());
    }
}
