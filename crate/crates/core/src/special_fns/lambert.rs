//! Real branches of the Lambert W function, the inverse of w ↦ w eʷ.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// W₀, with w ≥ −1, defined for x ≥ −1/e.
    Principal,
    /// W₋₁, with w ≤ −1, defined for −1/e ≤ x < 0.
    Lower,
}

// 1/e split into a double and its rounding error
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// W(x) on the requested branch.
pub fn lambert_w(branch: Branch, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(domain("Lambert W of NaN"));
    }
    // x + 1/e, with the constant carried in two parts
    let q = (x + INV_E_HI) + INV_E_LO;
    if q < -4.0 * f64::EPSILON * INV_E_HI {
        return Err(domain(format!("Lambert W undefined below -1/e (x = {x})")));
    }
    if q <= 0.0 {
        return Ok(-1.0);
    }
    match branch {
        Branch::Principal => Ok(principal(x, q)),
        Branch::Lower => {
            if x >= 0.0 {
                return Err(domain(format!("lower Lambert branch needs x < 0 (x = {x})")));
            }
            if x > -0.25 {
                Ok(lower_from_log((-x).ln()))
            } else {
                Ok(halley(x, branch_series(q, -1.0)))
            }
        }
    }
}

/// W₋₁(−e^L) computed from L = ln(−x) directly, so that arguments whose
/// magnitude underflows a double are still resolved. Requires L ≤ −1.
pub fn lambert_w_lower_from_log(ln_neg_x: f64) -> Result<f64> {
    if ln_neg_x.is_nan() || ln_neg_x > -1.0 + 1e-15 {
        if ln_neg_x.is_finite() && ln_neg_x <= -1.0 + 1e-12 {
            return Ok(-1.0);
        }
        return Err(domain(format!("lower Lambert branch undefined for ln(-x) = {ln_neg_x} > -1")));
    }
    if ln_neg_x == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if ln_neg_x < -1.3862943611198906 {
        // x > -1/4
        Ok(lower_from_log(ln_neg_x))
    } else {
        lambert_w(Branch::Lower, -ln_neg_x.exp())
    }
}

fn principal(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x > std::f64::consts::E {
        // w + ln w = ln x, Newton from the asymptotic guess
        let lx = x.ln();
        let mut w = lx - lx.ln();
        for _ in 0..50 {
            let step = (w + w.ln() - lx) / (1.0 + 1.0 / w);
            w -= step;
            if step.abs() <= 1e-16 * w.abs() {
                break;
            }
        }
        return w;
    }
    let guess = if x < -0.25 { branch_series(q, 1.0) } else { x.ln_1p() };
    halley(x, guess)
}

/// Solves w + ln(−w) = L for w ≤ −1 by Newton's method.
fn lower_from_log(l: f64) -> f64 {
    let mut w = l - (-l).ln();
    for _ in 0..60 {
        let step = (w + (-w).ln() - l) / (1.0 + 1.0 / w);
        let next = w - step;
        w = if next >= -1.0 { 0.5 * (w - 1.0) } else { next };
        if step.abs() <= 1e-16 * w.abs() {
            break;
        }
    }
    w
}

/// Series about the branch point in p = ±√(2(e x + 1)).
fn branch_series(q: f64, sign: f64) -> f64 {
    let p = sign * (2.0 * std::f64::consts::E * q).sqrt();
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300) {
            break;
        }
    }
    w
}
