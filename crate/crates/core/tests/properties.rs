use proptest::prelude::*;

use bmcross_core::analytics::{crossing_prob, sigma_cdf, DensityCurve, DensityKind};
use bmcross_core::barriers::{time_invert, BarrierSpec};
use bmcross_core::cli::{parse_spec_json, spec_to_json};
use bmcross_core::image_measure::{identity_grid, verify_barrier_identity};
use bmcross_core::special_fns::{
    bivariate_norm_cdf, bivariate_norm_pdf, hermite_largest_zero, lambert_w, norm_cdf, norm_pdf, Branch, Correlation,
};

fn prob(spec: &BarrierSpec, start: f64) -> f64 {
    crossing_prob(spec, start).unwrap().probability.unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn normal_symmetry(x in -40.0f64..40.0) {
        prop_assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bivariate_symmetric_in_arguments(x in -6.0f64..6.0, y in -6.0f64..6.0, r in -1.0f64..=1.0) {
        let rho = Correlation::new(r).unwrap();
        prop_assert!((bivariate_norm_cdf(x, y, rho) - bivariate_norm_cdf(y, x, rho)).abs() < 1e-14);
    }

    #[test]
    fn bivariate_partial_derivatives(x in -3.0f64..3.0, y in -3.0f64..3.0, r in -0.99f64..0.99) {
        let rho = Correlation::new(r).unwrap();
        let h = 1e-5;
        let fd_x = (bivariate_norm_cdf(x + h, y, rho) - bivariate_norm_cdf(x - h, y, rho)) / (2.0 * h);
        let dx = norm_pdf(x) * norm_cdf((y - r * x) / (1.0 - r * r).sqrt());
        prop_assert!((fd_x - dx).abs() <= 1e-5 * dx.abs() + 1e-10, "{fd_x} vs {dx}");
        let hr = 1e-6;
        let (lo, hi) = (Correlation::new(r - hr).unwrap(), Correlation::new(r + hr).unwrap());
        let fd_r = (bivariate_norm_cdf(x, y, hi) - bivariate_norm_cdf(x, y, lo)) / (2.0 * hr);
        let dr = bivariate_norm_pdf(x, y, rho);
        prop_assert!((fd_r - dr).abs() <= 1e-5 * dr.abs() + 1e-9, "{fd_r} vs {dr}");
    }

    #[test]
    fn lambert_round_trip(u in 0.0f64..1.0, big in 0.0f64..700.0) {
        let x_lower = -(-1.0f64).exp() * u.max(1e-300);
        let w = lambert_w(Branch::Lower, x_lower).unwrap();
        prop_assert!(w <= -1.0);
        prop_assert!((w * w.exp() - x_lower).abs() / x_lower.abs().max(1e-300) < 1e-13);
        let x = -(-1.0f64).exp() + big.exp() - 1.0;
        let w = lambert_w(Branch::Principal, x).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - x).abs() / x.abs().max(1e-300) < 1e-13);
    }

    #[test]
    fn sqrt_remaining_identity(a in 0.0f64..3.0, b in -2.0f64..2.0, big_t in 0.1f64..5.0) {
        let s = BarrierSpec::sqrt_remaining(a, b, big_t).unwrap();
        let rep = verify_barrier_identity(&s.measure().unwrap(), |t| s.upper(t).unwrap(), &identity_grid(big_t, 200)).unwrap();
        prop_assert!(rep.max_abs_deviation < 1e-9, "{}", rep.max_abs_deviation);
    }

    #[test]
    fn linear_identity_and_monotonicity(a in 0.1f64..3.0, b in -2.0f64..2.0, big_t in 0.1f64..4.0) {
        let s = BarrierSpec::linear(a, b, big_t).unwrap();
        let rep = verify_barrier_identity(&s.measure().unwrap(), |t| s.upper(t).unwrap(), &identity_grid(big_t, 200)).unwrap();
        prop_assert!(rep.max_abs_deviation < 1e-9, "{}", rep.max_abs_deviation);
        let p = prob(&s, 0.0);
        let higher = prob(&BarrierSpec::linear(a + 0.1, b, big_t).unwrap(), 0.0);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(higher <= p);
    }

    #[test]
    fn start_shift_equals_barrier_shift(a in 0.5f64..3.0, b in -1.0f64..1.0, u in -2.0f64..0.4) {
        let s = BarrierSpec::linear(a, b, 1.0).unwrap();
        let shifted = BarrierSpec::linear(a - u, b, 1.0).unwrap();
        prop_assert_eq!(prob(&s, u), prob(&shifted, 0.0));
    }

    #[test]
    fn time_inversion_involution(a in 0.1f64..3.0, b in 0.0f64..2.0, big_t in 0.2f64..3.0, frac in 0.0f64..=1.0) {
        let base = BarrierSpec::sqrt_remaining(a, b, big_t).unwrap();
        let inv = time_invert(&base).unwrap();
        prop_assert_eq!(time_invert(&inv).unwrap(), base.clone());
        prop_assert!((prob(&inv, 0.0) - prob(&base, 0.0)).abs() < 1e-14);
        let t = frac * big_t;
        if t > 0.0 {
            let back = t / big_t * inv.upper(big_t * big_t / t).unwrap();
            prop_assert!((back - base.upper(t).unwrap()).abs() < 1e-14 * base.upper(t).unwrap().abs().max(1.0));
        }
    }

    #[test]
    fn curved_two_sided_symmetry(a in 0.2f64..2.0, b in -2.0f64..-0.2, w in 0.05f64..0.95, frac in 0.0f64..=1.0) {
        let lo = 2.0 * norm_cdf((b - a) / 2.0);
        let c = lo + w * (1.0 - lo);
        let s = BarrierSpec::two_sided_curved(a, b, c, 1.0).unwrap();
        let (g0, g1) = s.curved_two_sided(frac).unwrap();
        // exact whenever a + b lies on the ulp grid of g0 (as for a = -b)
        prop_assert!((g0 + g1 - (a + b)).abs() <= f64::EPSILON * g0.abs().max(g1.abs()));
        let sym = BarrierSpec::two_sided_curved(a, -a, c.max(2.0 * norm_cdf(-a) + 1e-9).min(0.999), 1.0).unwrap();
        let (h0, h1) = sym.curved_two_sided(frac).unwrap();
        prop_assert_eq!(h0 + h1, 0.0);
        prop_assert!(g1 <= g0);
    }

    #[test]
    fn spec_json_round_trip(a in -3.0f64..3.0, b in -3.0f64..3.0, big_t in 0.01f64..10.0) {
        let s = BarrierSpec::linear(a, b, big_t).unwrap();
        prop_assert_eq!(parse_spec_json(&spec_to_json(&s).to_string()).unwrap(), s);
    }

    #[test]
    fn sigma_cdf_nondecreasing(a in 0.5f64..2.0, b in 0.0f64..2.0, t1 in 0.01f64..0.99, dt in 0.0f64..0.5) {
        let s = BarrierSpec::sqrt_remaining(a, b, 1.0).unwrap();
        let t2 = (t1 + dt).min(1.0);
        prop_assert!(sigma_cdf(&s, t2).unwrap() >= sigma_cdf(&s, t1).unwrap() - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn csv_round_trip(a in 0.5f64..2.0, b in -1.0f64..1.0, points in 2usize..300) {
        let s = BarrierSpec::linear(a, b, 1.0).unwrap();
        let c = DensityCurve::tabulate(&s, DensityKind::Sigma, points).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        prop_assert_eq!(DensityCurve::read_csv(DensityKind::Sigma, buf.as_slice()).unwrap(), c);
    }
}

#[test]
fn hermite_zeros_interlace() {
    for n in 2..=10 {
        assert!(hermite_largest_zero(n - 1) < hermite_largest_zero(n), "n = {n}");
    }
}
