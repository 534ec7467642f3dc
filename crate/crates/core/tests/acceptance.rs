//! Acceptance criteria. Runs without the libtest harness so that every criterion
//! prints its PASS/FAIL line; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use contracta::classify::{
    check_leader_hinted, check_meir_keeler, check_nonexpansive, classify, DeltaSchedule, HierarchyClass,
    VerdictStatus,
};
use contracta::config::{Command, RunConfig};
use contracta::corpus::{get_instance, list_instances};
use contracta::orbit::{detect_unbounded, solve_fixed_point, Boundedness, FixedPointStatus};
use contracta::probe::{probe, IndexFamily};
use contracta::report::render_json;
use contracta::run::run;
use contracta::space::{estimate_s, triples_from_points, verify_axioms, Point, SampleSet};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// Oracle for the piecewise map, independent of the library.
fn t_piecewise(x: f64) -> f64 {
    if x <= 0.5 {
        x / 3.0
    } else {
        x / 3.0 + 0.25
    }
}

fn fastest<F: FnMut()>(runs: usize, mut f: F) -> Duration {
    (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn criterion_1() -> Outcome {
    let inst = get_instance("piecewise_leader").map_err(|e| e.to_string())?;
    let x0 = Point::real(0.75);
    let r = solve_fixed_point(&inst.space, &inst.map, &x0, 1e-9, 10_000).map_err(|e| e.to_string())?;
    ensure(r.status == FixedPointStatus::Converged, format!("status {:?}", r.status))?;
    let z = r.point.ok_or("no point")?.value;
    ensure(z.abs() <= 1e-9, format!("|z| = {z:e}"))?;
    ensure(r.residual <= 1e-9, format!("residual {:e}", r.residual))?;
    ensure(r.iterations <= 25, format!("{} iterations", r.iterations))?;
    let elapsed = fastest(20, || {
        solve_fixed_point(&inst.space, &inst.map, &x0, 1e-9, 10_000).unwrap();
    });
    ensure(elapsed < Duration::from_millis(1), format!("took {elapsed:?}"))?;
    Ok(format!(
        "z = {z:e}, residual {:e}, {} iterations, {elapsed:?}",
        r.residual, r.iterations
    ))
}

fn criterion_2() -> Outcome {
    let inst = get_instance("piecewise_leader").map_err(|e| e.to_string())?;
    let eps = 0.1;
    // r from 1/(4·3^(r−1)) < ε/2 and δ = (3^r/2 − 1)·ε.
    let r_expected = (1..).find(|&r| 1.0 / (4.0 * 3f64.powi(r - 1)) < eps / 2.0).unwrap();
    let delta_expected = (3f64.powi(r_expected) / 2.0 - 1.0) * eps;
    ensure(r_expected == 3 && (delta_expected - 1.25).abs() < 1e-15, "oracle constants")?;

    let samples = SampleSet::grid(&inst.space.domain, 751).map_err(|e| e.to_string())?;
    let spacing = samples.points[1].value - samples.points[0].value;
    ensure(spacing <= 1e-3 + 1e-15, format!("grid spacing {spacing}"))?;
    let start = Instant::now();
    let v = check_leader_hinted(
        &inst.space,
        &inst.map,
        &[eps],
        &DeltaSchedule::default(),
        10,
        &samples,
        inst.leader_hint.as_ref(),
        10_000,
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(v.status == VerdictStatus::CertifiedOnSamples, format!("status {:?}", v.status))?;
    let o = &v.per_epsilon[0];
    ensure(o.r == Some(3), format!("r = {:?}", o.r))?;
    ensure(o.delta.is_some_and(|d| (d - 1.25).abs() < 1e-12), format!("delta = {:?}", o.delta))?;
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;

    let t3: Vec<f64> = samples
        .points
        .iter()
        .map(|p| t_piecewise(t_piecewise(t_piecewise(p.value))))
        .collect();
    let worst = t3
        .iter()
        .flat_map(|a| t3.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    ensure(worst < eps, format!("max |T³x − T³y| = {worst}"))?;
    Ok(format!("r = 3, delta = 1.25, max |T³x − T³y| = {worst:.6}, {elapsed:?}"))
}

fn criterion_3() -> Outcome {
    let inst = get_instance("piecewise_leader").map_err(|e| e.to_string())?;
    let samples = SampleSet::grid(&inst.space.domain, 751).map_err(|e| e.to_string())?;
    ensure(
        samples.points.iter().any(|p| p.value > 0.5 && p.value - 0.5 < 0.01),
        "grid has no point within 0.01 right of 1/2",
    )?;
    let v = check_nonexpansive(&inst.space, &inst.map, &samples).map_err(|e| e.to_string())?;
    ensure(v.status == VerdictStatus::Falsified, format!("status {:?}", v.status))?;
    let w = v.witness.as_ref().and_then(|w| w.as_pair()).ok_or("no pair witness")?;
    let (lo, hi) = (w.x.value.min(w.y.value), w.x.value.max(w.y.value));
    ensure(lo <= 0.5 && hi > 0.5, format!("witness ({lo}, {hi}) does not straddle 1/2"))?;
    let ratio = w.ratio();
    ensure(ratio >= 20.0, format!("ratio {ratio}"))?;
    let oracle = (t_piecewise(0.51) - t_piecewise(0.5)).abs() / 0.01;
    ensure((oracle - 25.333_333_333).abs() < 1e-6, format!("oracle ratio {oracle}"))?;
    Ok(format!("witness ({lo}, {hi}) ratio {ratio:.2}; pair (0.5, 0.51) ratio {oracle:.2}"))
}

fn criterion_4() -> Outcome {
    let inst = get_instance("piecewise_leader").map_err(|e| e.to_string())?;
    let samples = SampleSet::grid(&inst.space.domain, 751).map_err(|e| e.to_string())?;
    let v = check_meir_keeler(&inst.space, &inst.map, &[0.25], &DeltaSchedule::default(), &samples)
        .map_err(|e| e.to_string())?;
    ensure(v.status == VerdictStatus::Falsified, format!("status {:?}", v.status))?;
    let w = v.witness.as_ref().and_then(|w| w.as_pair()).ok_or("no pair witness")?;
    ensure(
        (w.x.value, w.y.value) == (0.5, 0.75),
        format!("witness ({}, {})", w.x.value, w.y.value),
    )?;
    ensure(w.d_before == 0.25, format!("d = {}", w.d_before))?;
    let oracle = (t_piecewise(0.75) - t_piecewise(0.5)).abs();
    ensure((w.d_after - oracle).abs() < 1e-15 && w.d_after >= 0.25, format!("d_after = {}", w.d_after))?;
    Ok(format!("witness (0.5, 0.75), d = 0.25, d(Tx,Ty) = {:.6}", w.d_after))
}

fn criterion_5() -> Outcome {
    let inst = get_instance("harmonic_shift_low").map_err(|e| e.to_string())?;
    let x0 = inst.start().map_err(|e| e.to_string())?;
    let report = detect_unbounded(&inst.space, &inst.map, &x0, 2.0, 4).map_err(|e| e.to_string())?;
    ensure(report.verdict == Boundedness::Diverging, format!("verdict {:?}", report.verdict))?;
    let (len, diam) = report.windows[0];
    let h100: f64 = (1..=100).map(|k| 1.0 / k as f64).sum();
    let oracle = (h100 - 1.0) / 2.0;
    ensure(len == 100, format!("first window {len}"))?;
    ensure(diam >= 2.09 && (diam - oracle).abs() <= 1e-3, format!("diameter {diam} vs {oracle}"))?;
    let r = solve_fixed_point(&inst.space, &inst.map, &x0, 1e-9, 10_000).map_err(|e| e.to_string())?;
    ensure(r.status == FixedPointStatus::MaxIter && r.point.is_none(), format!("solver {:?}", r.status))?;
    Ok(format!("diverging, diameter {diam:.4} at length 100; solver max_iter"))
}

fn criterion_6() -> Outcome {
    let banach = get_instance("banach_half").map_err(|e| e.to_string())?;
    let h = classify(&banach.space, &banach.map, &banach.classify_config().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    for p in &h.placements {
        ensure(
            p.status == VerdictStatus::CertifiedOnSamples,
            format!("banach_half {} is {}", p.class.as_str(), p.status.as_str()),
        )?;
    }
    ensure(h.faults.is_empty(), "banach_half has consistency faults")?;

    let pw = get_instance("piecewise_leader").map_err(|e| e.to_string())?;
    let h = classify(&pw.space, &pw.map, &pw.classify_config().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let status = |c| h.placement(c).status;
    ensure(status(HierarchyClass::Leader) == VerdictStatus::CertifiedOnSamples, "piecewise Leader")?;
    ensure(h.status_of("nonexpansive") == Some("falsified"), "piecewise non-expansive")?;
    ensure(status(HierarchyClass::NonexpansiveLeader) == VerdictStatus::Falsified, "piecewise N.Le")?;
    ensure(h.faults.is_empty(), "piecewise_leader has consistency faults")?;
    Ok("banach_half in all five classes; piecewise_leader Leader only; no faults".into())
}

fn criterion_7() -> Outcome {
    let family = IndexFamily::default_family();
    let mut notes = Vec::new();
    for (name, x0) in [("banach_half", 1.0), ("piecewise_leader", 0.75)] {
        let inst = get_instance(name).map_err(|e| e.to_string())?;
        let r = probe(&inst.space, &inst.map, &Point::real(x0), &family, 30, 10_000).map_err(|e| e.to_string())?;
        for (m, row) in r.sigma_mnp.iter().enumerate() {
            for p in 0..30 {
                ensure(
                    row[p + 1] <= row[p] + 1e-12,
                    format!("{name} member {} p = {p}: {} > {}", r.members[m], row[p + 1], row[p]),
                )?;
            }
        }
        ensure(r.theta_p_monotone, format!("{name}: theta_p not nonincreasing"))?;
        if name == "piecewise_leader" {
            for p in 9..=30 {
                ensure(r.theta_p[p] < 1e-3, format!("theta({p}) = {}", r.theta_p[p]))?;
            }
        }
        let worst_gap = r.squeeze_gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        notes.push(format!("{name}: squeeze_holds = {} (max gap {worst_gap:e})", r.squeeze_holds));
    }
    Ok(notes.join("; "))
}

fn criterion_8() -> Outcome {
    let inst = get_instance("square_b").map_err(|e| e.to_string())?;
    let grid = SampleSet::grid(&inst.space.domain, 41).map_err(|e| e.to_string())?;
    let s = estimate_s(&inst.space, &triples_from_points(&grid.points)).map_err(|e| e.to_string())?;
    ensure((1.99..=2.0 + 1e-9).contains(&s), format!("estimate_s = {s}"))?;
    let report = verify_axioms(&inst.space, &grid).map_err(|e| e.to_string())?;
    ensure(report.all_passed(), "axioms fail with s = 2")?;
    let strict = inst.space.clone();
    let strict = contracta::space::BMetricSpace { s_claimed: 1.0, ..strict };
    let triple = SampleSet::cartesian([-2.0, 0.0, 2.0].map(Point::real).to_vec());
    let report = verify_axioms(&strict, &triple).map_err(|e| e.to_string())?;
    ensure(!report.all_passed(), "axioms pass with s = 1 on (−2, 0, 2)")?;
    let worst = report.worst_triple.ok_or("no worst triple")?;
    Ok(format!(
        "estimate_s = {s}; s = 1 fails on ({}, {}, {}) with ratio {}",
        worst.x.value, worst.y.value, worst.z.value, worst.ratio
    ))
}

fn criterion_9() -> Outcome {
    let mut config = RunConfig::for_instance("piecewise_leader", Command::Classify);
    config.sampler.seed = Some(42);
    let a = render_json(&run(&config, Command::Classify).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let b = render_json(&run(&config, Command::Classify).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(a == b, "reports differ")?;
    Ok(format!("{} identical bytes", a.len()))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for name in list_instances() {
        let inst = get_instance(name).map_err(|e| e.to_string())?;
        let (space, map) = inst.expression_form().map_err(|e| e.to_string())?;
        let grid = inst.space.domain.grid(1000).map_err(|e| e.to_string())?;
        for p in &grid {
            let a = inst.map.apply(p).map_err(|e| e.to_string())?.value;
            let b = map.apply(p).map_err(|e| e.to_string())?.value;
            worst = worst.max((a - b).abs());
        }
        for i in 0..grid.len() {
            for j in [grid.len() - 1 - i, (7 * i) % grid.len()] {
                let a = inst.space.distance(&grid[i], &grid[j]).map_err(|e| e.to_string())?;
                let b = space.distance(&grid[i], &grid[j]).map_err(|e| e.to_string())?;
                worst = worst.max((a - b).abs());
            }
        }
        ensure(worst <= 1e-12, format!("{name}: deviation {worst:e}"))?;
    }
    Ok(format!("max deviation {worst:e} over five instances"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("fixed point of the piecewise map", criterion_1),
        ("Leader certificate r = 3, delta = 1.25", criterion_2),
        ("non-expansiveness failure at 1/2", criterion_3),
        ("Meir-Keeler falsification at epsilon = 0.25", criterion_4),
        ("harmonic orbit unbounded", criterion_5),
        ("hierarchy placement", criterion_6),
        ("proof-probe monotonicity", criterion_7),
        ("b-metric coefficient of square_b", criterion_8),
        ("byte-identical classify reports", criterion_9),
        ("grammar forms match builtins", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {title} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {title} ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
