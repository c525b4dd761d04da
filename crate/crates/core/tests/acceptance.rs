//! Acceptance run: one PASS/FAIL line per criterion. Failures only change the
//! exit status when BMCROSS_ACCEPTANCE_STRICT is set.
//! The two Monte Carlo suites at 10^6 paths dominate the runtime.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bmcross_core::analytics::{
    crossing_prob, image_crossing, images_crossing, images_hitting_pdf, lambda_cdf, lambda_pdf, sigma_cdf, sigma_pdf,
    two_sided_sigma_cdf, two_sided_sigma_pdf,
};
use bmcross_core::barriers::{mirrored_log_remaining, BarrierSpec};
use bmcross_core::montecarlo::{with_threads, McConfig};
use bmcross_core::verify::{exact_checks, identity_checks, mc_checks, mc_suite, McSuiteReport};
use bmcross_core::Result;

const MC_PATHS: u64 = 1_000_000;
const MC_STEPS: usize = 1 << 12;
const MC_SEED: u64 = 42;
const FD_H: f64 = 1e-5;
const FD_REL: f64 = 1e-5;
const SERIES_TOL: f64 = 1e-10;
const STRICT_ENV: &str = "BMCROSS_ACCEPTANCE_STRICT";

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: u32, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let r = f();
    let took = start.elapsed();
    let (mut passed, mut detail) = match r {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if took > b {
            passed = false;
            detail.push_str(&format!("; over the {:.0?} budget", b));
        }
    }
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {id}. {title} ({took:.2?}): {detail}");
    passed
}

fn failed_names(checks: &[bmcross_core::verify::Check]) -> Vec<String> {
    checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect()
}

fn identities() -> Result<Outcome> {
    let mut checks = Vec::new();
    identity_checks(&mut checks);
    let bad = failed_names(&checks);
    Ok(Outcome { passed: bad.is_empty(), detail: format!("{} barriers, failing: {bad:?}", checks.len()) })
}

fn exact() -> Result<Outcome> {
    let mut checks = Vec::new();
    exact_checks(&mut checks);
    let bad = failed_names(&checks);
    let detail = checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect::<Vec<_>>().join("; ");
    Ok(Outcome { passed: bad.is_empty(), detail })
}

struct FdRow {
    name: String,
    worst: f64,
    // (t, pdf, fd, roundoff floor ε·|F|/h) where the relative check fails
    misses: Vec<(f64, f64, f64, f64)>,
}

fn fd_row(
    name: &str,
    points: impl IntoIterator<Item = f64>,
    cdf: impl Fn(f64) -> Result<f64>,
    pdf: impl Fn(f64) -> Result<f64>,
) -> Result<FdRow> {
    let h = FD_H;
    let mut row = FdRow { name: name.to_string(), worst: 0.0, misses: Vec::new() };
    for t in points {
        let fd = (cdf(t + h)? - cdf(t - h)?) / (2.0 * h);
        let p = pdf(t)?;
        let rel = ((fd - p) / p).abs();
        row.worst = row.worst.max(rel);
        if !(rel < FD_REL) {
            row.misses.push((t, p, fd, f64::EPSILON * cdf(t)?.abs() / h));
        }
    }
    Ok(row)
}

fn finite_differences() -> Result<Outcome> {
    let interior = || (1..=20).map(|k| k as f64 / 21.0);
    let mut rows = Vec::new();
    let one_sided = [
        ("sigma linear a=1 b=0.5", BarrierSpec::linear(1.0, 0.5, 1.0)?),
        ("sigma sqrt-remaining a=1 b=1", BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0)?),
        ("sigma log-remaining a=1.5 b=e", BarrierSpec::log_remaining(1.5, E, 1.0)?),
        ("sigma hermite n=2 a=2 b=10", BarrierSpec::hermite(2.0, 10.0, 2, 1.0)?),
    ];
    for (name, s) in &one_sided {
        rows.push(fd_row(name, interior(), |t| sigma_cdf(s, t), |t| sigma_pdf(s, t))?);
    }
    let s = BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0)?;
    rows.push(fd_row("lambda sqrt-remaining a=1 b=1", interior(), |t| lambda_cdf(&s, t), |t| lambda_pdf(&s, t))?);
    let s = BarrierSpec::images_lambert(1.0, 2.0, 1.0)?;
    let m = s.measure()?;
    rows.push(fd_row(
        "images-lambert a=1 b=2",
        interior().map(|t| 0.05 + 0.9 * t),
        |t| images_crossing(&s, &m, t).map(|r| r.probability.unwrap_or(f64::NAN)),
        |t| images_hitting_pdf(&s, &m, t),
    )?);
    let s = BarrierSpec::two_sided_curved(1.0, -1.0, 0.5, 1.0)?;
    rows.push(fd_row(
        "two-sided-curved a=1 b=-1 c=0.5",
        interior(),
        |t| two_sided_sigma_cdf(&s, t),
        |t| two_sided_sigma_pdf(&s, t),
    )?);

    let passed = rows.iter().all(|r| r.misses.is_empty());
    let mut detail = rows.iter().map(|r| format!("{} {:.1e}", r.name, r.worst)).collect::<Vec<_>>().join(", ");
    detail = format!("max relative error: {detail}");
    for r in rows.iter().filter(|r| !r.misses.is_empty()) {
        for (t, p, fd, floor) in &r.misses {
            detail.push_str(&format!(
                "\n         {} at t={t:.4}: pdf {p:.3e}, difference quotient {fd:.3e}, roundoff floor of the quotient {floor:.1e}",
                r.name
            ));
        }
    }
    Ok(Outcome { passed, detail })
}

/// Survival in the strip (b, a) by separation of variables: the heat kernel on
/// [0, L] with absorbing ends, expanded in sine modes and integrated against δ_{x0}.
fn strip_sine_series(a: f64, b: f64, big_t: f64) -> f64 {
    let l = a - b;
    let x0 = -b;
    let mut survive = 0.0;
    for n in 1..=400u32 {
        let k = n as f64 * PI / l;
        let mass = if n % 2 == 1 { 4.0 / (n as f64 * PI) } else { 0.0 };
        survive += mass * (k * x0).sin() * (-0.5 * k * k * big_t).exp();
    }
    1.0 - survive
}

fn series() -> Result<Outcome> {
    let s = BarrierSpec::two_sided_constant(1.0, -1.0, 1.0)?;
    let p = crossing_prob(&s, 0.0)?.probability.unwrap_or(f64::NAN);
    let oracle = strip_sine_series(1.0, -1.0, 1.0);
    let d = (p - oracle).abs();
    Ok(Outcome { passed: d < SERIES_TOL, detail: format!("library {p:.15}, sine series {oracle:.15}, |diff| {d:.1e}") })
}

fn crossing_and_last_exit(r: &McSuiteReport) -> Result<Outcome> {
    let mut checks = Vec::new();
    mc_checks(r, &mut checks);
    checks.retain(|c| !c.name.starts_with("mc/fortet"));
    // the listed Hermite b=10 configuration sits outside its crossing formula's range
    let listed = BarrierSpec::hermite(2.0, 10.0, 2, 1.0)?;
    let refused = crossing_prob(&listed, 0.0)?;
    let refusal_ok = !refused.conditions_met && refused.probability.is_none();
    let worst_z = r.crossing.iter().map(|c| c.mc.z_score(c.analytic).abs()).fold(0.0f64, f64::max);
    let bad = failed_names(&checks);
    Ok(Outcome {
        passed: bad.is_empty() && refusal_ok,
        detail: format!(
            "{} crossing rows (max |z| {worst_z:.2}), {} last-exit rows at 9 times; hermite n=2 a=2 b=10 crossing refused: {refusal_ok} \
             (violated: {:?}), crossing row uses b=3; failing: {bad:?}",
            r.crossing.len(),
            r.last_exit.len(),
            refused.violations()
        ),
    })
}

fn fortet(r: &McSuiteReport) -> Result<Outcome> {
    let mut checks = Vec::new();
    mc_checks(r, &mut checks);
    checks.retain(|c| c.name.starts_with("mc/fortet"));
    let detail = checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect::<Vec<_>>().join("; ");
    Ok(Outcome { passed: checks.len() == 3 && failed_names(&checks).is_empty(), detail })
}

fn mirrored() -> Result<Outcome> {
    let (a, b, big_t) = (1.5, E, 1.0);
    let m = BarrierSpec::log_remaining(a, b, big_t)?.measure()?;
    let r = image_crossing(mirrored_log_remaining(a, b, big_t), &m, 0.0, None)?;
    let c = &r.condition_report;
    let passed = c.len() >= 2 && c[0].satisfied && !c[1].satisfied && r.probability.is_none() && !r.conditions_met;
    let detail = c.iter().map(|c| format!("{} = {}", c.text, c.satisfied)).collect::<Vec<_>>().join("; ");
    Ok(Outcome { passed, detail: format!("{detail}; probability refused: {}", r.probability.is_none()) })
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "barrier identities", Some(Duration::from_secs(5)), identities);
    ok &= report(2, "exact identities", Some(Duration::from_secs(1)), exact);
    ok &= report(3, "density vs CDF differences", Some(Duration::from_secs(10)), finite_differences);
    ok &= report(5, "strip series vs sine-series oracle", Some(Duration::from_secs(1)), series);
    ok &= report(7, "mirrored log-remaining barrier", None, mirrored);

    let cfg = McConfig::new(MC_PATHS, MC_STEPS, MC_SEED).expect("valid config");
    let t0 = Instant::now();
    let first = mc_suite(&cfg);
    let suite_time = t0.elapsed();
    match &first {
        Ok(r) => {
            ok &= report(4, "Monte Carlo agreement", None, || {
                crossing_and_last_exit(r).map(|mut o| {
                    // budget written for a multi-core desktop; this is the whole suite, Fortet rows included
                    let budget = Duration::from_secs(600);
                    o.detail.push_str(&format!("; full suite took {suite_time:.1?}"));
                    if suite_time > budget {
                        o.passed = false;
                        o.detail.push_str(" (over the 10 min budget)");
                    }
                    o
                })
            });
            ok &= report(6, "Fortet equation", None, || fortet(r));
        }
        Err(e) => {
            println!("[FAIL] 4. Monte Carlo agreement: error: {e}");
            println!("[FAIL] 6. Fortet equation: error: {e}");
            ok = false;
        }
    }

    ok &= report(8, "determinism across runs and thread counts", None, || {
        let again = with_threads(2, || mc_suite(&cfg))??;
        let a = serde_json::to_string(first.as_ref().map_err(Clone::clone)?).expect("serializable");
        let b = serde_json::to_string(&again).expect("serializable");
        Ok(Outcome {
            passed: a == b,
            detail: format!("second run on 2 threads, {} report bytes, identical: {}", a.len(), a == b),
        })
    });

    let strict = std::env::var_os(STRICT_ENV).is_some();
    println!(
        "acceptance: {}{}",
        if ok { "all criteria passed" } else { "some criteria FAILED (see above)" },
        if strict { "" } else { "; report mode, set BMCROSS_ACCEPTANCE_STRICT=1 to turn failures into a nonzero exit" }
    );
    if ok || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
