use std::process::Command;

use bmcross_core::analytics::{crossing_prob, lambda_cdf, sigma_cdf};
use bmcross_core::barriers::BarrierSpec;
use bmcross_core::montecarlo::{mc_crossing, mc_fortet_check, mc_last_exit, McConfig, THREADS_ENV};
use bmcross_core::special_fns::norm_cdf;
use bmcross_core::verify::mc_specs;

fn cfg(paths: u64, steps: usize, seed: u64) -> McConfig {
    McConfig::new(paths, steps, seed).unwrap()
}

#[test]
fn quadrupling_paths_halves_std_error() {
    let s = BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0).unwrap();
    let small = mc_crossing(&s, &cfg(40_000, 256, 11)).unwrap();
    let big = mc_crossing(&s, &cfg(160_000, 256, 11)).unwrap();
    let ratio = small.std_error / big.std_error;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn same_output_for_any_thread_count() {
    let exe = env!("CARGO_BIN_EXE_bmcross");
    let run = |threads: &str| {
        let out = Command::new(exe)
            .args(["mc", "--family", "two-sided-constant", "--a", "1", "--b", "-1", "--T", "1"])
            .args(["--paths", "30000", "--steps", "256", "--seed", "5", "--bridge", "--json"])
            .env(THREADS_ENV, threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}

#[test]
fn arcsine_and_endpoint_identity() {
    let s = BarrierSpec::sqrt_remaining(0.0, 0.0, 1.0).unwrap();
    let grid = [0.25, 0.5, 0.75, 1.0];
    let e = mc_last_exit(&s, &cfg(100_000, 1024, 3), &grid).unwrap();
    // (2/π) arcsin √(1/2) = 1/2
    assert!(e.lambda[1].agrees_with(0.5, 3.0, 0.0), "{:?}", e.lambda[1]);
    let end = norm_cdf(0.0);
    assert!(e.sigma[3].agrees_with(end, 3.0, 0.0), "{:?}", e.sigma[3]);
    assert!(e.sigma.windows(2).all(|w| w[0].estimate <= w[1].estimate));
    assert!(e.lambda.windows(2).all(|w| w[0].estimate <= w[1].estimate));
    for (i, &t) in grid.iter().enumerate() {
        assert!(e.lambda[i].agrees_with(lambda_cdf(&s, t).unwrap(), 3.0, 0.0), "t={t}");
        assert!(e.sigma[i].agrees_with(sigma_cdf(&s, t).unwrap(), 3.0, 0.0), "t={t}");
    }
}

#[test]
fn raw_grid_underestimates_and_refines() {
    let s = BarrierSpec::linear(1.0, 0.0, 1.0).unwrap();
    let coarse = mc_crossing(&s, &cfg(50_000, 64, 9).with_bridge(false)).unwrap();
    let fine = mc_crossing(&s, &cfg(50_000, 1024, 9).with_bridge(false)).unwrap();
    let exact = 2.0 * norm_cdf(-1.0);
    assert!(coarse.estimate < fine.estimate);
    assert!(fine.estimate < exact);
}

#[test]
fn bridge_step_doubling_is_stable() {
    for (name, spec) in mc_specs() {
        let a = mc_crossing(&spec, &cfg(20_000, 1 << 12, 17)).unwrap();
        let b = mc_crossing(&spec, &cfg(20_000, 1 << 14, 17)).unwrap();
        let combined = a.std_error.hypot(b.std_error);
        assert!((a.estimate - b.estimate).abs() < 2.0 * combined.max(1e-12), "{name}: {a:?} vs {b:?}");
    }
}

#[test]
fn fortet_sqrt_remaining() {
    let s = BarrierSpec::sqrt_remaining(1.0, 0.5, 1.0).unwrap();
    let (lhs, rhs) = mc_fortet_check(&s, 2.0, 0.0, &cfg(100_000, 1024, 21)).unwrap();
    assert!(rhs.agrees_with(lhs, 3.0, 0.0), "{lhs} vs {rhs:?}");
}

#[test]
fn crossing_matches_closed_forms_at_moderate_size() {
    for (name, spec) in mc_specs() {
        let exact = crossing_prob(&spec, 0.0).unwrap().probability.unwrap();
        let e = mc_crossing(&spec, &cfg(50_000, 1024, 23)).unwrap();
        assert!(e.agrees_with(exact, 3.0, 5e-3), "{name}: {exact} vs {e:?}");
    }
}
