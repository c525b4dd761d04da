//! The `bmcross` command line: `prob`, `density`, `mc` and `verify`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 condition violation or
//! domain error, 64 usage error.

mod spec_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

pub use spec_file::{parse_spec_json, spec_from_parts, spec_to_json, SCHEMA_VERSION};

use crate::analytics::{crossing_prob, lambda_cdf, sigma_cdf, DensityCurve, DensityKind};
use crate::barriers::BarrierSpec;
use crate::error::{Error, Result};
use crate::montecarlo::{mc_crossing, mc_fortet_check, mc_last_exit, with_threads, McConfig, McEstimate};
use crate::verify::{run_suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "bmcross", version, about = "Brownian motion crossing probabilities against moving barriers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Crossing probability with the conditions of its formula
    Prob(ProbArgs),
    /// Tabulate a CDF/PDF curve as CSV
    Density(DensityArgs),
    /// Monte Carlo estimate, optionally beside the closed form
    Mc(McArgs),
    /// Run the verification suite
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// barrier file: {"schema":1, "family", "params", "horizon"}
    #[arg(long, value_name = "FILE", conflicts_with_all = ["family", "base", "a", "b", "c", "n", "horizon"])]
    spec: Option<PathBuf>,
    /// linear, sqrt-remaining, log-remaining, hermite, time-inverted,
    /// two-sided-constant, two-sided-curved, images-lambert
    #[arg(long)]
    family: Option<String>,
    /// base family of a time-inverted barrier
    #[arg(long)]
    base: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    /// horizon T
    #[arg(long = "T", visible_alias = "horizon", value_name = "T", allow_negative_numbers = true)]
    horizon: Option<f64>,
}

#[derive(Args, Debug)]
struct ProbArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    start: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// curve to tabulate (default: the family's natural one)
    #[arg(long, value_parser = ["sigma", "lambda", "hitting-inverted", "hitting-images"])]
    kind: Option<String>,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    /// right end of the grid for inverted barriers (default 100 T)
    #[arg(long)]
    t_max: Option<f64>,
    /// CSV destination (default standard output)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Brownian-bridge correction between grid points
    #[arg(long)]
    bridge: bool,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    start: f64,
    /// worker threads (default: BMCROSS_THREADS or all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// check Fortet's equation at (u, v) instead
    #[arg(long, requires = "v")]
    fortet: bool,
    #[arg(long, allow_negative_numbers = true)]
    v: Option<f64>,
    /// Fortet start (default --start)
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
    /// empirical sigma/lambda CDFs instead
    #[arg(long, conflicts_with = "fortet")]
    last_exit: bool,
    #[arg(long, default_value_t = 9)]
    grid_points: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// add Monte Carlo agreement checks
    #[arg(long)]
    include_mc: bool,
    #[arg(long, default_value_t = 1_000_000)]
    paths: u64,
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    no_bridge: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// include the mirrored log-remaining barrier (fails boundedness)
    #[arg(long)]
    mirrored_log: bool,
    #[arg(long)]
    json: bool,
}

/// Runs the command line with `args` (program name first). Returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Prob(a) => run_prob(&a, out, err),
        Command::Density(a) => run_density(&a, out),
        Command::Mc(a) => run_mc(&a, out),
        Command::Verify(a) => run_verify(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = match e {
                Error::Parse(_) => EXIT_USAGE,
                _ => EXIT_CONDITION,
            };
            let _ = writeln!(err, "error: {e}");
            if code == EXIT_USAGE {
                let _ = writeln!(err, "see bmcross --help");
            }
            code
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("i/o failed: {e}"))
}

fn build_spec(s: &SpecArgs) -> Result<BarrierSpec> {
    if let Some(path) = &s.spec {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        return parse_spec_json(&text);
    }
    let family = s.family.as_deref().ok_or_else(|| Error::Parse("give --spec FILE or --family".into()))?;
    let horizon = s.horizon.ok_or_else(|| Error::Parse("missing --T".into()))?;
    let mut p = Map::new();
    for (k, v) in [("a", s.a), ("b", s.b), ("c", s.c)] {
        if let Some(v) = v {
            p.insert(k.into(), json!(v));
        }
    }
    if let Some(n) = s.n {
        p.insert("n".into(), json!(n));
    }
    if family == "time-inverted" {
        let base = s.base.as_deref().ok_or_else(|| Error::Parse("time-inverted needs --base FAMILY".into()))?;
        let nested = json!({ "base": { "family": base, "params": Value::Object(p) } });
        return spec_from_parts(family, nested, horizon);
    }
    if s.base.is_some() {
        return Err(Error::Parse("--base only applies to --family time-inverted".into()));
    }
    spec_from_parts(family, Value::Object(p), horizon)
}

fn emit_json(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(format!("json failed: {e}")))?;
    writeln!(out, "{text}").map_err(io_err)
}

fn run_prob(a: &ProbArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let spec = build_spec(&a.spec)?;
    let r = crossing_prob(&spec, a.start)?;
    if a.json {
        emit_json(
            out,
            &json!({
                "spec": spec_to_json(&spec),
                "start": a.start,
                "probability": r.probability,
                "conditions_met": r.conditions_met,
                "formula": r.formula,
                "conditions": r.condition_report,
            }),
        )?;
    } else {
        match r.probability {
            Some(p) => writeln!(out, "probability: {p}"),
            None => writeln!(out, "probability: unavailable"),
        }
        .map_err(io_err)?;
        writeln!(out, "formula: {}", r.formula).map_err(io_err)?;
        writeln!(out, "conditions:").map_err(io_err)?;
        for c in &r.condition_report {
            writeln!(out, "  {} {}", if c.satisfied { "ok  " } else { "FAIL" }, c.text).map_err(io_err)?;
        }
    }
    if r.conditions_met {
        Ok(EXIT_OK)
    } else {
        for v in r.violations() {
            let _ = writeln!(err, "violated: {v}");
        }
        Ok(EXIT_CONDITION)
    }
}

fn parse_kind(k: &str) -> DensityKind {
    match k {
        "sigma" => DensityKind::Sigma,
        "lambda" => DensityKind::Lambda,
        "hitting-inverted" => DensityKind::HittingInverted,
        _ => DensityKind::HittingImages,
    }
}

fn run_density(a: &DensityArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = build_spec(&a.spec)?;
    let kind = a.kind.as_deref().map_or_else(|| DensityKind::default_for(&spec), parse_kind);
    let curve = DensityCurve::tabulate_until(&spec, kind, a.points, a.t_max)?;
    match &a.out {
        Some(path) => {
            let f = std::fs::File::create(path)
                .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
            curve.write_csv(std::io::BufWriter::new(f))?;
            writeln!(out, "wrote {} rows to {}", curve.grid.len(), path.display()).map_err(io_err)?;
        }
        None => curve.write_csv(out)?,
    }
    Ok(EXIT_OK)
}

fn on_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(n) => with_threads(n, f),
        None => Ok(f()),
    }
}

fn estimate_json(e: &McEstimate) -> Value {
    json!({
        "estimate": e.estimate,
        "std_error": e.std_error,
        "ci95": [e.ci95.0, e.ci95.1],
        "paths_used": e.paths_used,
    })
}

fn run_mc(a: &McArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = build_spec(&a.spec)?;
    let cfg = McConfig::new(a.paths, a.steps, a.seed)?.with_bridge(a.bridge).with_start(a.start);
    let config = serde_json::to_value(cfg).expect("plain struct");
    if a.fortet {
        let (u, v) = (a.u.unwrap_or(a.start), a.v.expect("clap requires --v"));
        let (lhs, rhs) = on_threads(a.threads, || mc_fortet_check(&spec, v, u, &cfg))??;
        let z = rhs.z_score(lhs);
        if a.json {
            emit_json(
                out,
                &json!({ "spec": spec_to_json(&spec), "u": u, "v": v, "lhs": lhs, "rhs": estimate_json(&rhs), "z_score": z, "config": rhs.config }),
            )?;
        } else {
            writeln!(out, "lhs: {lhs}\nrhs: {}\nstd_error: {}\nz_score: {z}", rhs.estimate, rhs.std_error)
                .map_err(io_err)?;
        }
        return Ok(EXIT_OK);
    }
    if a.last_exit {
        if a.grid_points < 1 {
            return Err(Error::Parse("--grid-points must be at least 1".into()));
        }
        let big_t = spec.horizon();
        let grid: Vec<f64> = (1..=a.grid_points).map(|k| big_t * k as f64 / (a.grid_points + 1) as f64).collect();
        let est = on_threads(a.threads, || mc_last_exit(&spec, &cfg, &grid))??;
        let sigma: Vec<Option<f64>> = grid.iter().map(|&t| sigma_cdf(&spec, t).ok()).collect();
        let lambda: Vec<Option<f64>> = grid.iter().map(|&t| lambda_cdf(&spec, t).ok()).collect();
        if a.json {
            let rows: Vec<Value> = (0..grid.len())
                .map(|i| {
                    json!({
                        "t": grid[i],
                        "sigma": estimate_json(&est.sigma[i]),
                        "sigma_analytic": sigma[i],
                        "lambda": estimate_json(&est.lambda[i]),
                        "lambda_analytic": lambda[i],
                    })
                })
                .collect();
            emit_json(out, &json!({ "spec": spec_to_json(&spec), "rows": rows, "config": config }))?;
        } else {
            writeln!(out, "t sigma_mc sigma_se sigma_exact lambda_mc lambda_se lambda_exact").map_err(io_err)?;
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
            for i in 0..grid.len() {
                writeln!(
                    out,
                    "{} {} {} {} {} {} {}",
                    grid[i],
                    est.sigma[i].estimate,
                    est.sigma[i].std_error,
                    show(sigma[i]),
                    est.lambda[i].estimate,
                    est.lambda[i].std_error,
                    show(lambda[i])
                )
                .map_err(io_err)?;
            }
        }
        return Ok(EXIT_OK);
    }
    let est = on_threads(a.threads, || mc_crossing(&spec, &cfg))??;
    let analytic = crossing_prob(&spec, a.start).ok().and_then(|r| r.probability);
    let z = analytic.map(|p| est.z_score(p));
    if a.json {
        let mut v = estimate_json(&est);
        let m = v.as_object_mut().expect("object");
        m.insert("spec".into(), spec_to_json(&spec));
        m.insert("config".into(), config);
        m.insert("analytic".into(), json!(analytic));
        m.insert("z_score".into(), json!(z));
        emit_json(out, &v)?;
    } else {
        writeln!(out, "estimate: {}", est.estimate).map_err(io_err)?;
        writeln!(out, "std_error: {}", est.std_error).map_err(io_err)?;
        writeln!(out, "ci95: [{}, {}]", est.ci95.0, est.ci95.1).map_err(io_err)?;
        writeln!(
            out,
            "paths: {} steps: {} seed: {} bridge: {} start: {}",
            cfg.paths,
            cfg.steps,
            cfg.seed,
            if cfg.bridge_correction { "on" } else { "off" },
            cfg.start
        )
        .map_err(io_err)?;
        if let (Some(p), Some(z)) = (analytic, z) {
            writeln!(out, "analytic: {p}\nz_score: {z}").map_err(io_err)?;
        }
    }
    Ok(EXIT_OK)
}

fn run_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let monte_carlo =
        if a.include_mc { Some(McConfig::new(a.paths, a.steps, a.seed)?.with_bridge(!a.no_bridge)) } else { None };
    let opts = SuiteOptions { monte_carlo, mirrored_log: a.mirrored_log };
    let report = on_threads(a.threads, || run_suite(&opts))??;
    if a.json {
        emit_json(out, &report)?;
    } else {
        for c in &report.checks {
            writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail).map_err(io_err)?;
        }
        let passed = report.checks.iter().filter(|c| c.passed).count();
        writeln!(out, "{passed} of {} checks passed", report.checks.len()).map_err(io_err)?;
    }
    Ok(if report.all_passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
