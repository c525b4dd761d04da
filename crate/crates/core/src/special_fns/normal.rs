use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::hermite::hermite_eval;

/// 1/√(2π)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal distribution function N(x).
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density N′(x).
pub fn norm_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// k-th derivative of N; `k = 0` is N itself, `k = 1` the density.
///
/// For `k >= 1`, N⁽ᵏ⁾(x) = (−1)^(k−1) H_(k−1)(x) N′(x).
pub fn norm_pdf_deriv(k: u32, x: f64) -> f64 {
    match k {
        0 => norm_cdf(x),
        1 => norm_pdf(x),
        _ => {
            let pdf = norm_pdf(x);
            if pdf == 0.0 {
                return 0.0;
            }
            let sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * hermite_eval(k - 1, x) * pdf
        }
    }
}

/// ln N(x), accurate in the far left tail where N underflows.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 0.0 {
        return (-norm_cdf(-x)).ln_1p();
    }
    if x > -35.0 {
        return norm_cdf(x).ln();
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // Mills-ratio asymptotic series
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2.powi(4);
    -0.5 * x * x - 0.5 * (2.0 * PI).ln() - (-x).ln() + series.ln()
}

/// e^a · N(x) without intermediate overflow or underflow.
pub fn exp_times_norm_cdf(a: f64, x: f64) -> f64 {
    let n = norm_cdf(x);
    if a.abs() < 700.0 && n > 1e-290 {
        a.exp() * n
    } else {
        (a + log_norm_cdf(x)).exp()
    }
}
