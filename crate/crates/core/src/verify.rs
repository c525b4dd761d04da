//! The built-in verification suite: structural identities, exact identities,
//! density-versus-CDF differences, the strip series cross-check and,
//! optionally, Monte Carlo agreement.

use serde::Serialize;

use crate::analytics::{
    constant_two_sided_crossing, crossing_prob, image_crossing, images_condition_deviation, images_condition_grid,
    images_crossing, images_hitting_pdf, lambda_cdf, lambda_pdf, sigma_cdf, sigma_pdf, two_sided_sigma_cdf,
    two_sided_sigma_pdf, IDENTITY_TOL, IMAGES_CONDITION_TOL,
};
use crate::barriers::{mirrored_log_remaining, time_invert, BarrierSpec, Family};
use crate::error::Result;
use crate::image_measure::{identity_grid, verify_barrier_identity};
use crate::montecarlo::{mc_crossing, mc_fortet_check, mc_last_exit, LastExitEstimate, McConfig, McEstimate};
use crate::special_fns::norm_cdf;

/// Central difference step for density checks.
pub const FD_STEP: f64 = 1e-5;
/// Relative agreement required between a density and CDF differences.
pub const FD_REL_TOL: f64 = 1e-5;
/// Absolute floor for the same comparison: rounding noise of differencing
/// probabilities of order one with step 1e-5.
pub const FD_ABS_FLOOR: f64 = 1e-10;
/// MC agreement: |analytic − MC| < max(MC_SIGMAS·SE, MC_FLOOR).
pub const MC_SIGMAS: f64 = 3.0;
pub const MC_FLOOR: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((ok, detail)) => Self::new(name, ok, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub all_passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McSuiteReport>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// run the Monte Carlo suite with this configuration
    pub monte_carlo: Option<McConfig>,
    /// add the mirrored log-remaining barrier, which must fail boundedness
    pub mirrored_log: bool,
}

/// Agreement of a difference quotient with a density.
pub fn fd_agrees(fd: f64, pdf: f64) -> bool {
    (fd - pdf).abs() <= FD_REL_TOL * pdf.abs() + FD_ABS_FLOOR
}

/// One-sided barriers whose measures are checked against U(g(t), t; μ) = 1.
pub fn identity_specs() -> Vec<(String, BarrierSpec)> {
    let e = std::f64::consts::E;
    vec![
        ("linear a=1 b=0.5".into(), BarrierSpec::linear(1.0, 0.5, 1.0).unwrap()),
        ("sqrt-remaining a=1 b=-0.5".into(), BarrierSpec::sqrt_remaining(1.0, -0.5, 1.0).unwrap()),
        ("log-remaining a=1.5 b=e".into(), BarrierSpec::log_remaining(1.5, e, 1.0).unwrap()),
        ("hermite n=1 a=1 b=2".into(), BarrierSpec::hermite(1.0, 2.0, 1, 1.0).unwrap()),
        ("hermite n=2 a=2 b=10".into(), BarrierSpec::hermite(2.0, 10.0, 2, 1.0).unwrap()),
        ("hermite n=3 a=2.5 b=20".into(), BarrierSpec::hermite(2.5, 20.0, 3, 1.0).unwrap()),
    ]
}

pub fn identity_checks(out: &mut Vec<Check>) {
    for (name, spec) in identity_specs() {
        let r = (|| {
            let m = spec.measure()?;
            let rep = verify_barrier_identity(&m, |t| spec.upper(t).unwrap_or(f64::NAN), &identity_grid(1.0, 1000))?;
            Ok((
                rep.max_abs_deviation < IDENTITY_TOL && rep.bounded,
                format!("max |U(g(t),t;mu) - 1| = {:e}, bound {:.6}", rep.max_abs_deviation, rep.empirical_bound),
            ))
        })();
        out.push(Check::from_result(&format!("identity/{name}"), r));
    }
    let r = (|| {
        let s = BarrierSpec::images_lambert(1.0, 2.0, 1.0)?;
        let dev = images_condition_deviation(&s, &s.measure()?, &images_condition_grid(1.0, 1000))?;
        Ok((dev < IMAGES_CONDITION_TOL, format!("max deviation {dev:e}")))
    })();
    out.push(Check::from_result("identity/images-lambert a=1 b=2", r));
}

pub fn exact_checks(out: &mut Vec<Check>) {
    let r = (|| {
        let mut worst = 0.0f64;
        for (a, t) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let p = crossing_prob(&BarrierSpec::linear(a, 0.0, t)?, 0.0)?.probability.unwrap_or(f64::NAN);
            worst = worst.max((p - 2.0 * norm_cdf(-a / t.sqrt())).abs());
        }
        Ok((worst < 1e-14, format!("max error {worst:e}")))
    })();
    out.push(Check::from_result("exact/reflection principle", r));

    let r = (|| {
        let mut worst = 0.0f64;
        for spec in [BarrierSpec::linear(0.0, 0.0, 1.0)?, BarrierSpec::sqrt_remaining(0.0, 0.0, 1.0)?] {
            for k in 1..100 {
                let t = k as f64 / 100.0;
                let exact = 1.0 / (std::f64::consts::PI * (t * (1.0 - t)).sqrt());
                worst = worst.max(((lambda_pdf(&spec, t)? - exact) / exact).abs());
            }
        }
        Ok((worst < 1e-13, format!("max relative error {worst:e}")))
    })();
    out.push(Check::from_result("exact/arcsine law", r));

    let r = (|| {
        let mut worst = 0.0f64;
        for base in [BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0)?, BarrierSpec::linear(1.0, 0.5, 2.0)?] {
            let inv = time_invert(&base)?;
            let p = crossing_prob(&inv, 0.0)?.probability.unwrap_or(f64::NAN);
            let q = crossing_prob(&base, 0.0)?.probability.unwrap_or(f64::NAN);
            worst = worst.max((p - q).abs());
        }
        Ok((worst < 1e-14, format!("max difference {worst:e}")))
    })();
    out.push(Check::from_result("exact/time inversion preserves crossing", r));

    let r = (|| {
        let base = BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0)?;
        let twice = time_invert(&time_invert(&base)?)?;
        let inv = time_invert(&base)?;
        let mut worst = 0.0f64;
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            worst = worst.max((twice.upper(t)? - base.upper(t)?).abs());
            // evaluate the inversion of the inverted curve pointwise
            if t > 0.0 {
                let back = t * inv.upper(1.0 / t)?;
                worst = worst.max((back - base.upper(t)?).abs());
            }
        }
        Ok((twice == base && worst < 1e-14, format!("max difference {worst:e}")))
    })();
    out.push(Check::from_result("exact/double time inversion", r));

    let r = (|| {
        let (a, b) = (1.0, -1.0);
        let s = BarrierSpec::two_sided_curved(a, b, 0.5, 1.0)?;
        let mut exact = true;
        for k in 0..=100 {
            let (g0, g1) = s.curved_two_sided(k as f64 / 100.0)?;
            exact &= g0 + g1 == a + b;
        }
        Ok((exact, "g0(t) + g1(t) = a + b on 101 times".to_string()))
    })();
    out.push(Check::from_result("exact/curved two-sided symmetry", r));
}

/// Densities with their CDFs, at 20 interior points each.
pub fn fd_checks(out: &mut Vec<Check>) {
    let h = FD_STEP;
    let e = std::f64::consts::E;
    let one_sided = [
        ("linear a=1 b=0.5", BarrierSpec::linear(1.0, 0.5, 1.0)),
        ("sqrt-remaining a=1 b=1", BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0)),
        ("log-remaining a=1.5 b=e", BarrierSpec::log_remaining(1.5, e, 1.0)),
        ("hermite n=2 a=2 b=10", BarrierSpec::hermite(2.0, 10.0, 2, 1.0)),
    ];
    for (name, spec) in one_sided {
        let r = (|| {
            let spec = spec?;
            let mut fails = 0;
            for k in 1..=20 {
                let t = k as f64 / 21.0;
                let fd = (sigma_cdf(&spec, t + h)? - sigma_cdf(&spec, t - h)?) / (2.0 * h);
                fails += usize::from(!fd_agrees(fd, sigma_pdf(&spec, t)?));
            }
            Ok((fails == 0, format!("{fails} of 20 points disagree")))
        })();
        out.push(Check::from_result(&format!("density/sigma {name}"), r));
    }
    let r = (|| {
        let spec = BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0)?;
        let mut fails = 0;
        for k in 1..=20 {
            let t = k as f64 / 21.0;
            let fd = (lambda_cdf(&spec, t + h)? - lambda_cdf(&spec, t - h)?) / (2.0 * h);
            fails += usize::from(!fd_agrees(fd, lambda_pdf(&spec, t)?));
        }
        Ok((fails == 0, format!("{fails} of 20 points disagree")))
    })();
    out.push(Check::from_result("density/lambda sqrt-remaining a=1 b=1", r));
    let r = (|| {
        let spec = BarrierSpec::images_lambert(1.0, 2.0, 1.0)?;
        let m = spec.measure()?;
        let mut fails = 0;
        for k in 1..=20 {
            let t = 0.05 + 0.9 * k as f64 / 21.0;
            let p = |x| images_crossing(&spec, &m, x).map(|r| r.probability.unwrap_or(f64::NAN));
            let fd = (p(t + h)? - p(t - h)?) / (2.0 * h);
            fails += usize::from(!fd_agrees(fd, images_hitting_pdf(&spec, &m, t)?));
        }
        Ok((fails == 0, format!("{fails} of 20 points disagree")))
    })();
    out.push(Check::from_result("density/images-lambert a=1 b=2", r));
    let r = (|| {
        let spec = BarrierSpec::two_sided_curved(1.0, -1.0, 0.5, 1.0)?;
        let mut fails = 0;
        for k in 1..=20 {
            let t = k as f64 / 21.0;
            let fd = (two_sided_sigma_cdf(&spec, t + h)? - two_sided_sigma_cdf(&spec, t - h)?) / (2.0 * h);
            fails += usize::from(!fd_agrees(fd, two_sided_sigma_pdf(&spec, t)?));
        }
        Ok((fails == 0, format!("{fails} of 20 points disagree")))
    })();
    out.push(Check::from_result("density/two-sided-curved a=1 b=-1 c=0.5", r));
}

/// 1 − P(stay in (b, a)) by the classical reflection sum over k ∈ [−K, K].
pub fn strip_reflection_sum(a: f64, b: f64, big_t: f64, k_max: i32) -> f64 {
    let l = a - b;
    let st = big_t.sqrt();
    let mut stay = 0.0;
    for k in -k_max..=k_max {
        let s = 2.0 * k as f64 * l;
        stay +=
            norm_cdf((a - s) / st) - norm_cdf((b - s) / st) - norm_cdf((2.0 * a - b - s) / st) + norm_cdf((a - s) / st);
    }
    1.0 - stay
}

pub fn series_check(out: &mut Vec<Check>) {
    let (p, terms) = constant_two_sided_crossing(1.0, -1.0, 0.0, 1.0);
    let oracle = strip_reflection_sum(1.0, -1.0, 1.0, 50);
    out.push(Check::new(
        "series/two-sided-constant a=1 b=-1",
        (p - oracle).abs() < 1e-10,
        format!("{p} ({terms} terms) vs reflection sum {oracle}"),
    ));
}

pub fn mirrored_checks(out: &mut Vec<Check>) {
    let (a, b, big_t) = (1.5, std::f64::consts::E, 1.0);
    let r = BarrierSpec::log_remaining(a, b, big_t)
        .and_then(|s| s.measure())
        .and_then(|m| image_crossing(mirrored_log_remaining(a, b, big_t), &m, 0.0, None));
    match r {
        Ok(res) => {
            let c = &res.condition_report;
            out.push(Check::new("mirrored-log/identity", c[0].satisfied, c[0].text.clone()));
            out.push(Check::new("mirrored-log/boundedness", c[1].satisfied, c[1].text.clone()));
        }
        Err(e) => out.push(Check::new("mirrored-log", false, format!("error: {e}"))),
    }
}

/// The barrier configurations compared against simulation.
pub fn mc_specs() -> Vec<(String, BarrierSpec)> {
    let e = std::f64::consts::E;
    vec![
        ("linear a=1 b=0".into(), BarrierSpec::linear(1.0, 0.0, 1.0).unwrap()),
        ("sqrt-remaining a=1 b=1".into(), BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0).unwrap()),
        ("log-remaining a=1.5 b=e".into(), BarrierSpec::log_remaining(1.5, e, 1.0).unwrap()),
        ("hermite n=2 a=2 b=3".into(), BarrierSpec::hermite(2.0, 3.0, 2, 1.0).unwrap()),
        (
            "time-inverted sqrt-remaining a=1 b=1".into(),
            time_invert(&BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0).unwrap()).unwrap(),
        ),
        ("two-sided-constant a=1 b=-1".into(), BarrierSpec::two_sided_constant(1.0, -1.0, 1.0).unwrap()),
        ("two-sided-curved a=1 b=-1 c=0.5".into(), BarrierSpec::two_sided_curved(1.0, -1.0, 0.5, 1.0).unwrap()),
        ("images-lambert a=1 b=2".into(), BarrierSpec::images_lambert(1.0, 2.0, 1.0).unwrap()),
    ]
}

/// Last-exit configurations: the one-sided families on [0, T], plus the
/// Hermite configuration whose crossing formula is out of range.
pub fn last_exit_specs() -> Vec<(String, BarrierSpec)> {
    let mut v: Vec<_> = mc_specs().into_iter().filter(|(_, s)| s.is_one_sided_on_horizon()).collect();
    v.push(("hermite n=2 a=2 b=10".into(), BarrierSpec::hermite(2.0, 10.0, 2, 1.0).unwrap()));
    v
}

/// (name, barrier, u, v) for Fortet's equation.
pub fn fortet_triples() -> Vec<(String, BarrierSpec, f64, f64)> {
    vec![
        ("linear a=1 b=0".into(), BarrierSpec::linear(1.0, 0.0, 1.0).unwrap(), 0.0, 1.5),
        ("sqrt-remaining a=1 b=0.5".into(), BarrierSpec::sqrt_remaining(1.0, 0.5, 1.0).unwrap(), 0.0, 2.0),
        ("linear a=1 b=0.5".into(), BarrierSpec::linear(1.0, 0.5, 1.0).unwrap(), -0.5, 2.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCrossingRow {
    pub name: String,
    pub analytic: f64,
    pub mc: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McLastExitRow {
    pub name: String,
    pub sigma_analytic: Vec<f64>,
    /// present for the families with a λ distribution
    pub lambda_analytic: Option<Vec<f64>>,
    pub mc: LastExitEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McFortetRow {
    pub name: String,
    pub u: f64,
    pub v: f64,
    pub lhs: f64,
    pub rhs: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSuiteReport {
    pub crossing: Vec<McCrossingRow>,
    pub last_exit: Vec<McLastExitRow>,
    pub fortet: Vec<McFortetRow>,
}

/// Runs every simulation of the suite with `cfg` (its start is ignored:
/// crossings start at 0 and Fortet rows carry their own u).
pub fn mc_suite(cfg: &McConfig) -> Result<McSuiteReport> {
    let cfg = cfg.with_start(0.0);
    let mut crossing = Vec::new();
    for (name, spec) in mc_specs() {
        let analytic = crossing_prob(&spec, 0.0)?.probability.unwrap_or(f64::NAN);
        crossing.push(McCrossingRow { name, analytic, mc: mc_crossing(&spec, &cfg)? });
    }
    let mut last_exit = Vec::new();
    for (name, spec) in last_exit_specs() {
        let grid: Vec<f64> = (1..=9).map(|k| spec.horizon() * k as f64 / 10.0).collect();
        let sigma_analytic = grid.iter().map(|&t| sigma_cdf(&spec, t)).collect::<Result<_>>()?;
        let lambda_analytic = match spec.family() {
            Family::Linear { .. } | Family::SqrtRemaining { .. } => {
                Some(grid.iter().map(|&t| lambda_cdf(&spec, t)).collect::<Result<_>>()?)
            }
            _ => None,
        };
        let mc = mc_last_exit(&spec, &cfg, &grid)?;
        last_exit.push(McLastExitRow { name, sigma_analytic, lambda_analytic, mc });
    }
    let mut fortet = Vec::new();
    for (name, spec, u, v) in fortet_triples() {
        let (lhs, rhs) = mc_fortet_check(&spec, v, u, &cfg)?;
        fortet.push(McFortetRow { name, u, v, lhs, rhs });
    }
    Ok(McSuiteReport { crossing, last_exit, fortet })
}

pub fn mc_checks(report: &McSuiteReport, out: &mut Vec<Check>) {
    for row in &report.crossing {
        out.push(Check::new(
            format!("mc/crossing {}", row.name),
            row.mc.agrees_with(row.analytic, MC_SIGMAS, MC_FLOOR),
            format!("analytic {} mc {} se {:e}", row.analytic, row.mc.estimate, row.mc.std_error),
        ));
    }
    for row in &report.last_exit {
        let mut worst = 0.0f64;
        let mut ok = true;
        let mut pairs: Vec<(f64, &McEstimate)> = row.sigma_analytic.iter().copied().zip(&row.mc.sigma).collect();
        if let Some(l) = &row.lambda_analytic {
            pairs.extend(l.iter().copied().zip(&row.mc.lambda));
        }
        for (a, e) in pairs {
            ok &= e.agrees_with(a, MC_SIGMAS, 0.0);
            worst = worst.max(e.z_score(a).abs());
        }
        out.push(Check::new(format!("mc/last-exit {}", row.name), ok, format!("max |z| = {worst:.3}")));
    }
    for row in &report.fortet {
        out.push(Check::new(
            format!("mc/fortet {} u={} v={}", row.name, row.u, row.v),
            row.rhs.agrees_with(row.lhs, MC_SIGMAS, 0.0),
            format!("lhs {} rhs {} se {:e}", row.lhs, row.rhs.estimate, row.rhs.std_error),
        ));
    }
}

/// Runs the suite. The report is deterministic for fixed options.
pub fn run_suite(opts: &SuiteOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    identity_checks(&mut checks);
    exact_checks(&mut checks);
    fd_checks(&mut checks);
    series_check(&mut checks);
    if opts.mirrored_log {
        mirrored_checks(&mut checks);
    }
    let monte_carlo = match &opts.monte_carlo {
        Some(cfg) => {
            let r = mc_suite(cfg)?;
            mc_checks(&r, &mut checks);
            Some(r)
        }
        None => None,
    };
    Ok(VerifyReport { all_passed: checks.iter().all(|c| c.passed), checks, monte_carlo })
}
