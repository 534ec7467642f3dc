//! Named, parameter-free instances.

use std::collections::BTreeMap;

use crate::classify::{AlphaSpec, ClassifyConfig, GeraghtyVariant, LeaderHint, PhiSpec};
use crate::error::{ContractaError, Result};
use crate::map::{BuiltinMap, MapSpec, SelfMap};
use crate::space::{BMetricSpace, BuiltinDistance, DistanceSpec, Domain, Point, DEFAULT_N_MAX};

const NAMES: [&str; 5] = [
    "banach_half",
    "harmonic_shift_abs",
    "harmonic_shift_low",
    "piecewise_leader",
    "square_b",
];

#[derive(Debug, Clone)]
pub struct InstanceDescriptor {
    pub name: String,
    pub space: BMetricSpace,
    pub map: SelfMap,
    /// Checker or class name → status under the default classify run.
    pub expected: BTreeMap<String, String>,
    pub notes: String,
    /// Default start for orbits and the solver.
    pub x0: f64,
    /// The map and distance written in the expression grammar.
    pub map_text: String,
    pub distance_text: String,
    pub phi: Option<String>,
    pub alpha: Option<String>,
    pub leader_hint: Option<LeaderHint>,
}

pub fn list_instances() -> Vec<&'static str> {
    NAMES.to_vec()
}

pub fn get_instance(name: &str) -> Result<InstanceDescriptor> {
    match name {
        "banach_half" => banach_half(),
        "harmonic_shift_abs" => harmonic("harmonic_shift_abs", 1.0),
        "harmonic_shift_low" => harmonic("harmonic_shift_low", 0.5),
        "piecewise_leader" => piecewise_leader(),
        "square_b" => square_b(),
        other => Err(ContractaError::argument(format!(
            "unknown instance {other:?}; known: {}",
            NAMES.join(", ")
        ))),
    }
}

fn expected(entries: &[(&str, &str)]) -> BTreeMap<String, String> {
    entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

const CERT: &str = "certified_on_samples";
const FALS: &str = "falsified";

fn banach_half() -> Result<InstanceDescriptor> {
    let domain = Domain::interval(0.0, 1.0)?;
    Ok(InstanceDescriptor {
        name: "banach_half".into(),
        space: BMetricSpace::new(domain.clone(), DistanceSpec::abs(), 1.0)?,
        map: SelfMap::new(MapSpec::Builtin(BuiltinMap::Scale(0.5)), domain)?,
        expected: expected(&[
            ("nonexpansive", CERT),
            ("meir_keeler", CERT),
            ("leader", CERT),
            ("matkowski", CERT),
            ("boyd_wong", CERT),
            ("n_le", CERT),
            ("geraghty_i", CERT),
            ("orbit", "bounded_so_far"),
        ]),
        notes: "Banach contraction x/2 on [0, 1] with the usual metric; a member of every class.".into(),
        x0: 1.0,
        map_text: "x/2".into(),
        distance_text: "abs(x - y)".into(),
        phi: Some("t/2".into()),
        alpha: Some("1/2".into()),
        leader_hint: None,
    })
}

fn piecewise_leader() -> Result<InstanceDescriptor> {
    let domain = Domain::interval(0.0, 0.75)?;
    Ok(InstanceDescriptor {
        name: "piecewise_leader".into(),
        space: BMetricSpace::new(domain.clone(), DistanceSpec::abs(), 1.0)?,
        map: SelfMap::new(MapSpec::Builtin(BuiltinMap::PiecewiseLeader), domain)?,
        expected: expected(&[
            ("nonexpansive", FALS),
            ("meir_keeler", FALS),
            ("leader", CERT),
            ("matkowski", FALS),
            ("boyd_wong", FALS),
            ("n_le", FALS),
            ("orbit", "bounded_so_far"),
        ]),
        notes: "x/3 on [0, 1/2] and x/3 + 1/4 on (1/2, 3/4]. Leader with r and delta from the \
jump 1/4 and factor 1/3; the jump at 1/2 breaks non-expansiveness. Unique fixed point 0.".into(),
        x0: 0.75,
        map_text: "piecewise(x <= 1/2 : x/3 ; x/3 + 1/4)".into(),
        distance_text: "abs(x - y)".into(),
        phi: None,
        alpha: None,
        leader_hint: Some(LeaderHint {
            contraction: 3.0,
            jump: 0.25,
        }),
    })
}

fn harmonic(name: &'static str, scale: f64) -> Result<InstanceDescriptor> {
    let domain = Domain::harmonic(DEFAULT_N_MAX)?;
    let (distance_text, notes) = if scale == 1.0 {
        (
            "abs(x - y)",
            "Harmonic numbers H_1, H_2, ... (capped) with the shift H_n -> H_{n+1}, at the upper metric |x - y|. \
The sampled certificates for the epsilon-delta classes use very small delta and come from the finite \
sample; far out in the sequence pairs at distance just above epsilon barely contract.",
        )
    } else {
        (
            "abs(x - y)/2",
            "Harmonic numbers H_1, H_2, ... (capped) with the shift H_n -> H_{n+1}, at the lower metric |x - y|/2. \
The sampled certificates for the epsilon-delta classes use very small delta and come from the finite \
sample; far out in the sequence pairs at distance just above epsilon barely contract.",
        )
    };
    Ok(InstanceDescriptor {
        name: name.into(),
        space: BMetricSpace::new(
            domain.clone(),
            DistanceSpec::Builtin(BuiltinDistance::ScaledAbs(scale)),
            1.0,
        )?,
        map: SelfMap::new(MapSpec::Builtin(BuiltinMap::Successor), domain)?,
        expected: expected(&[
            ("nonexpansive", CERT),
            ("meir_keeler", CERT),
            ("leader", CERT),
            ("n_le", CERT),
            ("orbit", "diverging"),
        ]),
        notes: notes.into(),
        x0: 1.0,
        map_text: "k + 1".into(),
        distance_text: distance_text.into(),
        phi: None,
        alpha: None,
        leader_hint: None,
    })
}

fn square_b() -> Result<InstanceDescriptor> {
    let domain = Domain::interval(-2.0, 2.0)?;
    Ok(InstanceDescriptor {
        name: "square_b".into(),
        space: BMetricSpace::new(domain.clone(), DistanceSpec::Builtin(BuiltinDistance::SquaredDiff), 2.0)?,
        map: SelfMap::new(MapSpec::Builtin(BuiltinMap::Scale(0.5)), domain)?,
        expected: expected(&[
            ("nonexpansive", CERT),
            ("meir_keeler", CERT),
            ("leader", CERT),
            ("matkowski", CERT),
            ("boyd_wong", CERT),
            ("n_le", CERT),
            ("geraghty_i", CERT),
            ("orbit", "bounded_so_far"),
        ]),
        notes: "(x - y)^2 on [-2, 2] is a b-metric with s = 2 but not a metric; x/2 divides distances by 4.".into(),
        x0: 2.0,
        map_text: "x/2".into(),
        distance_text: "(x - y)^2".into(),
        phi: Some("t/2".into()),
        alpha: Some("1/2".into()),
        leader_hint: None,
    })
}

impl InstanceDescriptor {
    pub fn start(&self) -> Result<Point> {
        self.space.domain.point(self.x0)
    }

    /// Default classify settings with this instance's φ, α, hint and orbit start.
    pub fn classify_config(&self) -> Result<ClassifyConfig> {
        Ok(ClassifyConfig {
            phi: self.phi.as_deref().map(PhiSpec::parse).transpose()?,
            alpha: self
                .alpha
                .as_deref()
                .map(|a| AlphaSpec::parse(a, GeraghtyVariant::TypeI))
                .transpose()?,
            leader_hint: self.leader_hint,
            orbit_start: Some(self.start()?),
            ..ClassifyConfig::default()
        })
    }

    /// The same instance with map and distance built from their grammar forms.
    pub fn expression_form(&self) -> Result<(BMetricSpace, SelfMap)> {
        let domain = self.space.domain.clone();
        let space = BMetricSpace::new(domain.clone(), DistanceSpec::parse(&self.distance_text)?, self.space.s_claimed)?;
        let map = SelfMap::new(MapSpec::parse(&self.map_text, &domain)?, domain)?;
        Ok((space, map))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        let names = list_instances();
        assert_eq!(names.len(), 5);
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for name in names {
            assert_eq!(get_instance(name).unwrap().name, name);
        }
        assert!(get_instance("nope").is_err());
    }

    #[test]
    fn left_branch_keeps_one_half() {
        let inst = get_instance("piecewise_leader").unwrap();
        let image = inst.map.apply(&Point::real(0.5)).unwrap().value;
        assert!((image - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_point_three() {
        let inst = get_instance("harmonic_shift_low").unwrap();
        let h4 = inst.space.domain.point_at(3).unwrap().value;
        assert!((h4 - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn expression_forms_parse() {
        for name in list_instances() {
            get_instance(name).unwrap().expression_form().unwrap();
        }
    }
}
