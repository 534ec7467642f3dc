//! Report rendering. JSON reals carry 17 significant digits and keys follow struct
//! order, so identical runs give identical bytes. CSV gives one flat table per
//! result kind.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::classify::{VerdictStatus, Witness};
use crate::config::{Command, OutputFormat};
use crate::error::Result;
use crate::orbit::Boundedness;
use crate::run::{CommandResult, Outcome};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u32,
    command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    instance: Option<&'a str>,
    result: &'a CommandResult,
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct ReportFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for ReportFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

pub fn render_json(outcome: &Outcome) -> Result<Vec<u8>> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        command: outcome.command,
        instance: outcome.instance.as_deref(),
        result: &outcome.result,
    };
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        ReportFormatter {
            pretty: PrettyFormatter::new(),
        },
    );
    doc.serialize(&mut ser).map_err(io::Error::from)?;
    out.push(b'\n');
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn rows_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io::Error::from)?;
    for row in rows {
        w.write_record(&row).map_err(io::Error::from)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn render_csv(outcome: &Outcome) -> Result<Vec<u8>> {
    match &outcome.result {
        CommandResult::Axioms(a) => {
            let r = &a.report;
            let mut checks = vec![("self_zero", &r.self_zero), ("positivity", &r.positivity), ("symmetry", &r.symmetry)];
            if let Some(t) = &r.triangle {
                checks.push(("triangle", t));
            }
            let mut rows: Vec<Vec<String>> = checks
                .into_iter()
                .map(|(name, c)| {
                    vec![
                        name.into(),
                        c.passed.to_string(),
                        c.checked.to_string(),
                        c.violations.to_string(),
                        opt(c.worst.as_ref().map(|w| w.1)),
                        opt(c.worst.as_ref().map(|w| w.2)),
                        String::new(),
                    ]
                })
                .collect();
            rows.push(vec![
                "s_estimate".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                opt(a.s_estimate),
            ]);
            rows_csv(
                &["check", "passed", "checked", "violations", "worst_lhs", "worst_rhs", "value"],
                rows,
            )
        }
        CommandResult::Iterate(it) => {
            let r = &it.result;
            let status = serde_json::to_value(r.status).map_err(io::Error::from)?;
            rows_csv(
                &["status", "point", "residual", "iterations", "x0", "tol", "max_iter"],
                vec![vec![
                    status.as_str().unwrap_or_default().to_string(),
                    opt(r.point.map(|p| p.value)),
                    fmt_f64(r.residual),
                    r.iterations.to_string(),
                    fmt_f64(it.x0.value),
                    fmt_f64(it.tol),
                    it.max_iter.to_string(),
                ]],
            )
        }
        CommandResult::Classify(c) => {
            let h = &c.placement;
            let mut rows = Vec::new();
            let blank = || vec![String::new(); 14];
            for p in &h.placements {
                let mut row = blank();
                row[0] = "placement".into();
                row[1] = p.class.as_str().into();
                row[2] = p.status.as_str().into();
                row[3] = p.basis.clone();
                rows.push(row);
            }
            for v in &h.verdicts {
                let mut row = blank();
                row[0] = "verdict".into();
                row[1] = v.class.as_str().into();
                row[2] = v.status.as_str().into();
                match &v.witness {
                    Some(Witness::Pair(w)) => {
                        row[4] = opt(w.epsilon);
                        row[5] = w.r.to_string();
                        row[6] = opt(w.delta);
                        row[8] = "pair".into();
                        row[9] = fmt_f64(w.x.value);
                        row[10] = fmt_f64(w.y.value);
                        row[11] = fmt_f64(w.d_before);
                        row[12] = fmt_f64(w.d_after);
                        row[13] = fmt_f64(w.bound);
                    }
                    Some(Witness::FunctionAudit(w)) => {
                        row[3] = w.property.clone();
                        row[8] = "function_audit".into();
                        row[9] = fmt_f64(w.t);
                        row[12] = fmt_f64(w.value);
                        row[13] = fmt_f64(w.reference);
                    }
                    Some(Witness::Sequence(w)) => {
                        row[8] = "sequence".into();
                        row[9] = fmt_f64(w.s_n);
                        row[12] = fmt_f64(w.alpha);
                    }
                    None => {}
                }
                rows.push(row);
                for o in &v.per_epsilon {
                    let mut row = blank();
                    row[0] = "epsilon".into();
                    row[1] = v.class.as_str().into();
                    row[2] = o.status.as_str().into();
                    row[4] = fmt_f64(o.epsilon);
                    row[5] = o.r.map(|r| r.to_string()).unwrap_or_default();
                    row[6] = opt(o.delta);
                    row[7] = match o.source {
                        Some(s) => serde_json::to_value(s)
                            .map_err(io::Error::from)?
                            .as_str()
                            .unwrap_or_default()
                            .to_string(),
                        None => String::new(),
                    };
                    rows.push(row);
                }
            }
            let mut row = blank();
            row[0] = "orbit".into();
            row[2] = match h.orbit.verdict {
                Boundedness::BoundedSoFar => "bounded_so_far".into(),
                Boundedness::Diverging => "diverging".into(),
            };
            row[3] = format!("threshold {}", fmt_f64(h.orbit.threshold));
            row[12] = fmt_f64(h.orbit.last_diameter);
            rows.push(row);
            for f in &h.faults {
                let mut row = blank();
                row[0] = "fault".into();
                row[1] = f.smaller.as_str().into();
                row[2] = f.recheck.map(VerdictStatus::as_str).unwrap_or_default().into();
                row[3] = f.detail.clone();
                rows.push(row);
            }
            for e in &c.expectations {
                let mut row = blank();
                row[0] = "expectation".into();
                row[1] = e.check.clone();
                row[2] = e.actual.clone().unwrap_or_default();
                row[3] = format!("expected {}", e.expected);
                rows.push(row);
            }
            rows_csv(
                &[
                    "row", "class", "status", "basis", "epsilon", "r", "delta", "source", "witness", "x", "y",
                    "d_before", "d_after", "bound",
                ],
                rows,
            )
        }
        CommandResult::Probe(s) => {
            let rows = (0..=s.p_max)
                .map(|p| {
                    vec![
                        p.to_string(),
                        fmt_f64(s.sigma_p[p]),
                        fmt_f64(s.theta_p[p]),
                        s.squeeze_gaps.get(p).map(|g| fmt_f64(*g)).unwrap_or_default(),
                        s.sigma_p_monotone.to_string(),
                        s.theta_p_monotone.to_string(),
                        s.member_monotone.to_string(),
                        s.squeeze_holds.to_string(),
                    ]
                })
                .collect();
            rows_csv(
                &[
                    "p",
                    "sigma_p",
                    "theta_p",
                    "squeeze_gap",
                    "sigma_p_monotone",
                    "theta_p_monotone",
                    "member_monotone",
                    "squeeze_holds",
                ],
                rows,
            )
        }
        CommandResult::Corpus(entries) => rows_csv(
            &["name", "domain", "distance", "map", "s_claimed", "x0", "notes"],
            entries
                .iter()
                .map(|e| {
                    vec![
                        e.name.clone(),
                        e.domain.clone(),
                        e.distance.clone(),
                        e.map.clone(),
                        fmt_f64(e.s_claimed),
                        fmt_f64(e.x0),
                        e.notes.clone(),
                    ]
                })
                .collect(),
        ),
    }
}

pub fn render(outcome: &Outcome, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => render_json(outcome),
        OutputFormat::Csv => render_csv(outcome),
    }
}

/// Writes the report to `path`, or to stdout when absent.
pub fn emit_report(outcome: &Outcome, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let bytes = render(outcome, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::run::run;

    #[test]
    fn reals_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn iterate_report_is_versioned() {
        let outcome = run(&RunConfig::for_instance("banach_half", Command::Iterate), Command::Iterate).unwrap();
        let json: serde_json::Value = serde_json::from_slice(&render_json(&outcome).unwrap()).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["result"]["result"]["status"], "converged");
        assert!(json["result"]["result"]["residual"].as_f64().unwrap() <= 1e-9);
    }

    #[test]
    fn probe_csv_shape() {
        let outcome = run(&RunConfig::for_instance("banach_half", Command::Probe), Command::Probe).unwrap();
        let text = String::from_utf8(render_csv(&outcome).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "p,sigma_p,theta_p,squeeze_gap,sigma_p_monotone,theta_p_monotone,member_monotone,squeeze_holds"
        );
        assert_eq!(lines.count(), 31);
    }
}
