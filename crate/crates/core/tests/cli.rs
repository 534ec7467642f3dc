use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn contracta(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_contracta"));
    cmd.args(args).env_remove("CONTRACTA_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn corpus_runs_without_config() {
    let o = contracta(&["corpus"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = doc["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["banach_half", "harmonic_shift_abs", "harmonic_shift_low", "piecewise_leader", "square_b"]
    );
}

#[test]
fn iterate_writes_report_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"piecewise_leader\"\n");
    let out = dir.path().join("report.json");
    let o = contracta(&["iterate", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["result"]["result"]["status"], "converged");
}

#[test]
fn classify_reports_are_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "run.toml",
        "instance = \"piecewise_leader\"\ncommand = \"classify\"\n[sampler]\nseed = 42\n",
    );
    let paths: Vec<_> = ["a.json", "b.json"].iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        let o = contracta(&["classify", "--config", &cfg, "--out", p.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn bad_tolerance_names_its_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"banach_half\"\n\n[tolerances]\ntau_eq = -1.0\n");
    let o = contracta(&["iterate", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("tolerances.tau_eq"), "{err}");
    assert!(err.contains("constraint_violation"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"banach_half\"\n[sampler]\ncuont = 5\n");
    let o = contracta(&["iterate", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown_key"), "{}", stderr(&o));
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"banach_half\"\ncommand = \"probe\"\n");
    let o = contracta(&["iterate", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_is_a_usage_error() {
    assert_eq!(contracta(&["classify"], &[]).status.code(), Some(2));
    let o = contracta(&["classify", "--config", "/nonexistent/run.toml"], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn map_with_pole_fails_evaluation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "run.toml",
        "[inline]\ndistance = \"abs(x - y)\"\nmap = \"1/(x - 0.5)\"\n[inline.domain]\nkind = \"interval\"\nlo = 0.0\nhi = 1.0\n",
    );
    let o = contracta(&["iterate", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn missed_expectation_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"banach_half\"\n[checker]\nphi = \"t\"\n");
    let o = contracta(&["classify", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["result"]["expectations_met"], false);
}

#[test]
fn probe_csv_has_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"banach_half\"\n");
    let o = contracta(&["probe", "--config", &cfg, "--format", "csv"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().next().unwrap().starts_with("p,"), "{text}");
}

#[test]
fn random_sampler_takes_seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "run.toml",
        "instance = \"banach_half\"\n[sampler]\nstrategy = \"random\"\ncount = 40\n",
    );
    assert_eq!(contracta(&["axioms", "--config", &cfg], &[]).status.code(), Some(2));
    let o = contracta(&["axioms", "--config", &cfg], &[("CONTRACTA_SEED", "7")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = contracta(&["axioms", "--config", &cfg], &[("CONTRACTA_SEED", "seven")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", "instance = \"banach_half\"\n");
    let out = Path::new("/nonexistent-dir/report.json");
    let o = contracta(&["iterate", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
