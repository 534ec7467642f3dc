use super::{select_witness, ClassName, ClassVerdict, PairTable, PairWitness, VerdictParams, VerdictStatus, Witness};
use crate::error::Result;
use crate::map::SelfMap;
use crate::space::{BMetricSpace, SampleSet};

/// Δ(Tx,Ty) ≤ Δ(x,y) + τ on every sampled pair. The witness is the pair with the
/// largest expansion ratio.
pub fn check_nonexpansive(space: &BMetricSpace, map: &SelfMap, samples: &SampleSet) -> Result<ClassVerdict> {
    let table = PairTable::new(space, map, samples, 1)?;
    let after = table.after(space, 1)?;
    Ok(nonexpansive_from(&table, &after, space.tau_eq))
}

pub(crate) fn nonexpansive_from(table: &PairTable<'_>, after: &[f64], tau: f64) -> ClassVerdict {
    let params = VerdictParams {
        samples: table.samples.describe(),
        ..Default::default()
    };
    let violations = table
        .before
        .iter()
        .zip(after)
        .enumerate()
        .filter(|(_, (d, d1))| **d1 > **d + tau)
        .map(|(k, (d, d1))| (k, if *d > 0.0 { d1 / d } else { f64::INFINITY }));
    let mut verdict = ClassVerdict::new(ClassName::Nonexpansive, VerdictStatus::CertifiedOnSamples, params);
    verdict.worst_margin = table
        .before
        .iter()
        .zip(after)
        .map(|(d, d1)| d - d1)
        .reduce(f64::min);
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
            bound: table.before[k],
        }));
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{BuiltinMap, MapSpec};
    use crate::space::{Domain, DistanceSpec, Point};

    fn setup(map: BuiltinMap) -> (BMetricSpace, SelfMap) {
        let domain = Domain::interval(0.0, 0.75).unwrap();
        let space = BMetricSpace::new(domain.clone(), DistanceSpec::abs(), 1.0).unwrap();
        (space, SelfMap::new(MapSpec::Builtin(map), domain).unwrap())
    }

    #[test]
    fn identity_is_nonexpansive() {
        let (space, map) = setup(BuiltinMap::Identity);
        let samples = SampleSet::grid(&space.domain, 101).unwrap();
        let v = check_nonexpansive(&space, &map, &samples).unwrap();
        assert_eq!(v.status, VerdictStatus::CertifiedOnSamples);
        assert!(v.witness.is_none());
    }

    #[test]
    fn jump_pair_falsifies() {
        let (space, map) = setup(BuiltinMap::PiecewiseLeader);
        let samples = SampleSet::from_pairs(&[(Point::real(0.5), Point::real(0.51))]);
        let v = check_nonexpansive(&space, &map, &samples).unwrap();
        assert_eq!(v.status, VerdictStatus::Falsified);
        let w = v.witness.as_ref().unwrap().as_pair().unwrap();
        assert!((w.d_before - 0.01).abs() < 1e-15);
        assert!((w.d_after - (0.51 / 3.0 + 0.25 - 0.5 / 3.0)).abs() < 1e-15);
        assert!((w.ratio() - 25.333333333333).abs() < 1e-9);
        assert!(w.reproduces(&space, &map, 1e-12).unwrap());
    }
}
