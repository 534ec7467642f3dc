//! Command dispatch: a validated [`RunConfig`] in, a serializable result out.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::classify::{classify, HierarchyPlacement};
use crate::config::{Command, RunConfig};
use crate::corpus::{get_instance, list_instances, InstanceDescriptor};
use crate::error::{ContractaError, Result};
use crate::orbit::{solve_fixed_point, FixedPointResult};
use crate::probe::{probe, SigmaReport};
use crate::space::{estimate_s, thin, triples_from_points, verify_axioms, AxiomReport, Point, TRIANGLE_POINTS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomsOutput {
    pub samples: String,
    pub report: AxiomReport,
    /// Lower bound on s from the audited triples; absent when every triple was degenerate.
    pub s_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateOutput {
    pub x0: Point,
    pub tol: f64,
    pub max_iter: usize,
    pub result: FixedPointResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub check: String,
    pub expected: String,
    pub actual: Option<String>,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyOutput {
    pub placement: HierarchyPlacement,
    pub expectations: Vec<Expectation>,
    pub expectations_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub domain: String,
    pub distance: String,
    pub map: String,
    pub s_claimed: f64,
    pub x0: f64,
    pub notes: String,
    pub expected: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CommandResult {
    Axioms(AxiomsOutput),
    Iterate(IterateOutput),
    Classify(Box<ClassifyOutput>),
    Probe(SigmaReport),
    Corpus(Vec<CorpusEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub command: Command,
    pub instance: Option<String>,
    pub result: CommandResult,
}

impl Outcome {
    /// Exit status for a successful run: 1 when classify missed an expected status.
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            CommandResult::Classify(c) if !c.expectations_met => 1,
            _ => 0,
        }
    }
}

pub fn run(config: &RunConfig, command: Command) -> Result<Outcome> {
    if let Some(c) = config.command {
        if c != command {
            return Err(ContractaError::argument(format!(
                "config says command = {:?} but {:?} was requested",
                c.as_str(),
                command.as_str()
            )));
        }
    }
    if command == Command::Corpus {
        return Ok(Outcome {
            command,
            instance: None,
            result: CommandResult::Corpus(corpus_listing()?),
        });
    }
    let inst = config.subject()?;
    let result = match command {
        Command::Axioms => CommandResult::Axioms(axioms(config, &inst)?),
        Command::Iterate => {
            let x0 = inst.start()?;
            let t = &config.tolerances;
            CommandResult::Iterate(IterateOutput {
                x0,
                tol: t.tol,
                max_iter: t.max_iter,
                result: solve_fixed_point(&inst.space, &inst.map, &x0, t.tol, t.max_iter)?,
            })
        }
        Command::Classify => CommandResult::Classify(Box::new(classify_run(config, &inst)?)),
        Command::Probe => CommandResult::Probe(probe(
            &inst.space,
            &inst.map,
            &inst.start()?,
            &config.family()?,
            config.probe.p_max,
            config.tolerances.max_iter,
        )?),
        Command::Corpus => unreachable!("handled above"),
    };
    Ok(Outcome {
        command,
        instance: Some(inst.name),
        result,
    })
}

fn axioms(config: &RunConfig, inst: &InstanceDescriptor) -> Result<AxiomsOutput> {
    let samples = config.sampler().build(&inst.space.domain)?;
    let report = verify_axioms(&inst.space, &samples)?;
    let triples = triples_from_points(&thin(&samples.points, TRIANGLE_POINTS));
    Ok(AxiomsOutput {
        samples: samples.describe(),
        report,
        s_estimate: estimate_s(&inst.space, &triples).ok(),
    })
}

fn classify_run(config: &RunConfig, inst: &InstanceDescriptor) -> Result<ClassifyOutput> {
    let placement = classify(&inst.space, &inst.map, &config.classify_config(inst)?)?;
    let expectations: Vec<Expectation> = inst
        .expected
        .iter()
        .map(|(check, expected)| {
            let actual = placement.status_of(check).map(str::to_string);
            Expectation {
                check: check.clone(),
                expected: expected.clone(),
                matches: actual.as_deref() == Some(expected.as_str()),
                actual,
            }
        })
        .collect();
    Ok(ClassifyOutput {
        expectations_met: expectations.iter().all(|e| e.matches),
        placement,
        expectations,
    })
}

fn corpus_listing() -> Result<Vec<CorpusEntry>> {
    list_instances()
        .into_iter()
        .map(|name| {
            let inst = get_instance(name)?;
            Ok(CorpusEntry {
                name: inst.name,
                domain: inst.space.domain.to_string(),
                distance: inst.distance_text,
                map: inst.map_text,
                s_claimed: inst.space.s_claimed,
                x0: inst.x0,
                notes: inst.notes,
                expected: inst.expected,
            })
        })
        .collect()
}
