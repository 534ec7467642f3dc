//! Run configuration: a strict TOML document.
//!
//! ```toml
//! instance = "piecewise_leader"
//! command = "classify"
//!
//! [sampler]
//! strategy = "grid"
//! count = 751
//!
//! [checker]
//! epsilons = [0.1, 0.25]
//! ```
//!
//! Every section is optional and filled with defaults. Unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::{AlphaSpec, ClassifyConfig, DeltaSchedule, GeraghtyVariant, PhiSpec, Tolerances};
use crate::corpus::{get_instance, list_instances, InstanceDescriptor};
use crate::error::{ContractaError, Result};
use crate::expr::{Expr, Var};
use crate::map::{MapSpec, SelfMap};
use crate::orbit::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::probe::{IndexFamily, DEFAULT_GAPS, DEFAULT_K, DEFAULT_OFFSETS, DEFAULT_P_MAX};
use crate::space::{BMetricSpace, DistanceSpec, Domain, Generator, Sampler, SamplingStrategy, DEFAULT_N_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigErrorCode {
    SyntaxError,
    UnknownKey,
    TypeMismatch,
    MissingKey,
    ConstraintViolation,
}

impl ConfigErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfigErrorCode::SyntaxError => "syntax_error",
            ConfigErrorCode::UnknownKey => "unknown_key",
            ConfigErrorCode::TypeMismatch => "type_mismatch",
            ConfigErrorCode::MissingKey => "missing_key",
            ConfigErrorCode::ConstraintViolation => "constraint_violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub code: ConfigErrorCode,
    /// Dotted key path, empty for the document root.
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error [{}]", self.code.as_str())?;
        if !self.path.is_empty() {
            write!(f, " at {}", self.path)?;
        }
        if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Axioms,
    Iterate,
    Classify,
    Probe,
    Corpus,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Axioms => "axioms",
            Command::Iterate => "iterate",
            Command::Classify => "classify",
            Command::Probe => "probe",
            Command::Corpus => "corpus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Enumerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineDomain {
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// "harmonic" or an expression in k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

/// A space and map given directly in the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineInstance {
    pub distance: String,
    pub map: String,
    #[serde(default = "one")]
    pub s_claimed: f64,
    #[serde(default = "yes")]
    pub triangle_enforced: bool,
    pub domain: InlineDomain,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub strategy: SamplingStrategy,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let s = Sampler::default();
        SamplerConfig {
            strategy: s.strategy,
            count: s.count,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesConfig {
    pub tau_eq: f64,
    pub tau_semi: f64,
    pub tau_lim: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        TolerancesConfig {
            tau_eq: t.tau_eq,
            tau_semi: t.tau_semi,
            tau_lim: t.tau_lim,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckerConfig {
    pub epsilons: Vec<f64>,
    pub r_max: usize,
    /// Overrides the instance's φ candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    /// Overrides the instance's α candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    pub alpha_variant: GeraghtyVariant,
    pub iter_depth: usize,
    pub use_leader_hint: bool,
    pub delta_schedule: DeltaSchedule,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        let c = ClassifyConfig::default();
        CheckerConfig {
            epsilons: c.epsilons,
            r_max: c.r_max,
            phi: None,
            alpha: None,
            alpha_variant: GeraghtyVariant::TypeI,
            iter_depth: c.iter_depth,
            use_leader_hint: true,
            delta_schedule: c.delta_schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeTable {
    pub m: Vec<usize>,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub offsets: Vec<usize>,
    pub gaps: Vec<usize>,
    pub k: usize,
    pub p_max: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<ProbeTable>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            offsets: DEFAULT_OFFSETS.to_vec(),
            gaps: DEFAULT_GAPS.to_vec(),
            k: DEFAULT_K,
            p_max: DEFAULT_P_MAX,
            tables: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub threshold: f64,
    pub window_doublings: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        let c = ClassifyConfig::default();
        OrbitConfig {
            threshold: c.orbit_threshold,
            window_doublings: c.window_doublings,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Start point for iterate, probe and the orbit check; the instance default otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<InlineInstance>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub checker: CheckerConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub orbit: OrbitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parses and validates a document.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    load_config(text, None)
}

/// As [`parse_config`], with `seed_override` replacing `sampler.seed` before validation.
pub fn load_config(text: &str, seed_override: Option<u64>) -> std::result::Result<RunConfig, ConfigError> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| ConfigError {
        code: ConfigErrorCode::SyntaxError,
        path: String::new(),
        line: e.span().map(|s| line_at(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "." => String::new(),
            p => p,
        };
        let inner = e.into_inner();
        let message = inner.message().trim().to_string();
        let code = classify_message(&message);
        let path = match (code, backticked(&message)) {
            (ConfigErrorCode::MissingKey | ConfigErrorCode::UnknownKey, Some(key))
                if !path.ends_with(key) =>
            {
                join(&path, key)
            }
            _ => path,
        };
        ConfigError {
            code,
            line: inner
                .span()
                .map(|s| line_at(text, s.start))
                .or_else(|| locate(text, &path)),
            path,
            message,
        }
    })?;
    if let Some(seed) = seed_override {
        config.sampler.seed = Some(seed);
    }
    config.validate().map_err(|(path, message)| ConfigError {
        code: ConfigErrorCode::ConstraintViolation,
        line: locate(text, &path),
        path,
        message,
    })?;
    Ok(config)
}

fn classify_message(message: &str) -> ConfigErrorCode {
    if message.starts_with("unknown field") {
        ConfigErrorCode::UnknownKey
    } else if message.starts_with("missing field") {
        ConfigErrorCode::MissingKey
    } else {
        ConfigErrorCode::TypeMismatch
    }
}

fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `path` in the document: the `key = …` line under its table header, else
/// the header itself.
fn locate(text: &str, path: &str) -> Option<usize> {
    if path.is_empty() {
        return None;
    }
    let mut table = String::new();
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            table = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if path.starts_with(&table) && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        let Some((key, _)) = line.split_once('=') else { continue };
        let key = key.trim().trim_matches('"');
        if join(&table, key) == path {
            return Some(i + 1);
        }
    }
    header_line
}

type Violation = (String, String);

fn violation(path: &str, message: impl Into<String>) -> Violation {
    (path.to_string(), message.into())
}

fn positive(path: &str, v: f64) -> std::result::Result<(), Violation> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violation(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// A minimal config for a corpus instance.
    pub fn for_instance(name: &str, command: Command) -> Self {
        RunConfig {
            instance: Some(name.to_string()),
            command: Some(command),
            ..RunConfig::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize to TOML")
    }

    fn validate(&self) -> std::result::Result<(), Violation> {
        match (&self.instance, &self.inline) {
            (None, None) => return Err(violation("instance", "either instance or [inline] is required")),
            (Some(_), Some(_)) => return Err(violation("inline", "instance and [inline] are mutually exclusive")),
            (Some(name), None) if !list_instances().contains(&name.as_str()) => {
                return Err(violation(
                    "instance",
                    format!("unknown instance {name:?}; known: {}", list_instances().join(", ")),
                ))
            }
            _ => {}
        }
        if let Some(inline) = &self.inline {
            validate_inline(inline)?;
        }
        if let Some(x0) = self.x0 {
            if !x0.is_finite() {
                return Err(violation("x0", "must be finite"));
            }
        }

        let s = &self.sampler;
        if s.count == 0 {
            return Err(violation("sampler.count", "must be >= 1"));
        }
        match s.strategy {
            SamplingStrategy::Random if s.seed.is_none() => {
                return Err(violation("sampler.seed", "a seed is required when strategy = \"random\""))
            }
            SamplingStrategy::Explicit => {
                return Err(violation("sampler.strategy", "explicit samples cannot be configured here"))
            }
            _ => {}
        }

        let t = &self.tolerances;
        positive("tolerances.tau_eq", t.tau_eq)?;
        positive("tolerances.tau_semi", t.tau_semi)?;
        positive("tolerances.tau_lim", t.tau_lim)?;
        positive("tolerances.tol", t.tol)?;
        if t.tau_lim >= 1.0 {
            return Err(violation("tolerances.tau_lim", "must be below 1"));
        }
        if t.max_iter == 0 {
            return Err(violation("tolerances.max_iter", "must be >= 1"));
        }

        let c = &self.checker;
        if c.epsilons.is_empty() {
            return Err(violation("checker.epsilons", "must not be empty"));
        }
        for e in &c.epsilons {
            positive("checker.epsilons", *e)?;
        }
        if c.r_max == 0 || c.r_max > t.max_iter {
            return Err(violation(
                "checker.r_max",
                format!("must lie in 1..={} (tolerances.max_iter)", t.max_iter),
            ));
        }
        if c.iter_depth == 0 {
            return Err(violation("checker.iter_depth", "must be >= 1"));
        }
        let d = &c.delta_schedule;
        positive("checker.delta_schedule.start_factor", d.start_factor)?;
        if !(d.ratio > 0.0 && d.ratio < 1.0) {
            return Err(violation("checker.delta_schedule.ratio", "must lie in (0, 1)"));
        }
        if d.steps == 0 {
            return Err(violation("checker.delta_schedule.steps", "must be >= 1"));
        }
        if let Some(phi) = &c.phi {
            Expr::parse_in(phi, &[Var::T]).map_err(|e| violation("checker.phi", e.to_string()))?;
        }
        if let Some(alpha) = &c.alpha {
            Expr::parse_in(alpha, &[Var::T]).map_err(|e| violation("checker.alpha", e.to_string()))?;
        }

        let p = &self.probe;
        if p.offsets.is_empty() {
            return Err(violation("probe.offsets", "must not be empty"));
        }
        if p.gaps.is_empty() {
            return Err(violation("probe.gaps", "must not be empty"));
        }
        if p.k == 0 {
            return Err(violation("probe.k", "must be >= 1"));
        }
        self.family().map_err(|e| violation("probe.tables", e.to_string()))?;

        positive("orbit.threshold", self.orbit.threshold)?;
        Ok(())
    }

    /// The configured instance, with tau_eq applied to its space.
    pub fn subject(&self) -> Result<InstanceDescriptor> {
        let mut inst = match (&self.instance, &self.inline) {
            (Some(name), _) => get_instance(name)?,
            (None, Some(inline)) => inline_instance(inline, self.x0)?,
            (None, None) => return Err(ContractaError::argument("no instance configured")),
        };
        inst.space = inst.space.with_tau_eq(self.tolerances.tau_eq);
        if let Some(x0) = self.x0 {
            inst.x0 = x0;
        }
        Ok(inst)
    }

    pub fn sampler(&self) -> Sampler {
        Sampler {
            strategy: self.sampler.strategy,
            count: self.sampler.count,
            seed: self.sampler.seed.unwrap_or(0),
        }
    }

    pub fn classify_config(&self, inst: &InstanceDescriptor) -> Result<ClassifyConfig> {
        let c = &self.checker;
        let t = &self.tolerances;
        let phi = c.phi.as_deref().or(inst.phi.as_deref());
        let alpha = c.alpha.as_deref().or(inst.alpha.as_deref());
        Ok(ClassifyConfig {
            sampler: self.sampler(),
            tolerances: Tolerances {
                tau_eq: t.tau_eq,
                tau_semi: t.tau_semi,
                tau_lim: t.tau_lim,
            },
            epsilons: c.epsilons.clone(),
            delta_schedule: c.delta_schedule,
            r_max: c.r_max,
            iteration_budget: t.max_iter,
            phi: phi.map(PhiSpec::parse).transpose()?,
            iter_depth: c.iter_depth,
            alpha: alpha.map(|a| AlphaSpec::parse(a, c.alpha_variant)).transpose()?,
            probe_sequences: None,
            leader_hint: if c.use_leader_hint { inst.leader_hint } else { None },
            orbit_start: Some(inst.start()?),
            orbit_threshold: self.orbit.threshold,
            window_doublings: self.orbit.window_doublings,
        })
    }

    pub fn family(&self) -> Result<IndexFamily> {
        let p = &self.probe;
        let mut family = IndexFamily::parametric(&p.offsets, &p.gaps, p.k)?;
        for t in &p.tables {
            family = family.with_table(t.m.clone(), t.n.clone())?;
        }
        Ok(family)
    }
}

fn validate_inline(inline: &InlineInstance) -> std::result::Result<(), Violation> {
    let d = &inline.domain;
    match d.kind {
        DomainKind::Interval => {
            let (Some(lo), Some(hi)) = (d.lo, d.hi) else {
                return Err(violation("inline.domain", "an interval needs lo and hi"));
            };
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(violation("inline.domain.hi", "need finite lo < hi"));
            }
            if d.generator.is_some() || d.n_max.is_some() {
                return Err(violation("inline.domain", "generator and n_max apply to enumerated domains"));
            }
        }
        DomainKind::Enumerated => {
            if d.generator.is_none() {
                return Err(violation("inline.domain.generator", "an enumerated domain needs a generator"));
            }
            if d.lo.is_some() || d.hi.is_some() {
                return Err(violation("inline.domain", "lo and hi apply to interval domains"));
            }
            if d.n_max == Some(0) {
                return Err(violation("inline.domain.n_max", "must be >= 1"));
            }
        }
    }
    if !(inline.s_claimed >= 1.0 && inline.s_claimed.is_finite()) {
        return Err(violation("inline.s_claimed", "must be finite and >= 1"));
    }
    DistanceSpec::parse(&inline.distance).map_err(|e| violation("inline.distance", e.to_string()))?;
    let var = match d.kind {
        DomainKind::Interval => Var::X,
        DomainKind::Enumerated => Var::K,
    };
    Expr::parse_in(&inline.map, &[var]).map_err(|e| violation("inline.map", e.to_string()))?;
    if let Some(g) = d.generator.as_deref().filter(|g| *g != "harmonic") {
        Expr::parse_in(g, &[Var::K]).map_err(|e| violation("inline.domain.generator", e.to_string()))?;
    }
    Ok(())
}

fn inline_instance(inline: &InlineInstance, x0: Option<f64>) -> Result<InstanceDescriptor> {
    let d = &inline.domain;
    let domain = match d.kind {
        DomainKind::Interval => Domain::interval(d.lo.unwrap_or(0.0), d.hi.unwrap_or(1.0))?,
        DomainKind::Enumerated => {
            let generator = match d.generator.as_deref() {
                Some("harmonic") | None => Generator::Harmonic,
                Some(text) => Generator::Expr(Expr::parse_in(text, &[Var::K])?),
            };
            Domain::enumerated(generator, d.n_max.unwrap_or(DEFAULT_N_MAX))?
        }
    };
    let space = BMetricSpace::new(domain.clone(), DistanceSpec::parse(&inline.distance)?, inline.s_claimed)?
        .with_triangle(inline.triangle_enforced);
    let map = SelfMap::new(MapSpec::parse(&inline.map, &domain)?, domain.clone())?;
    let first = domain.grid(1)?[0].value;
    Ok(InstanceDescriptor {
        name: "inline".into(),
        space,
        map,
        expected: BTreeMap::new(),
        notes: String::new(),
        x0: x0.unwrap_or(first),
        map_text: inline.map.clone(),
        distance_text: inline.distance.clone(),
        phi: None,
        alpha: None,
        leader_hint: None,
    })
}
