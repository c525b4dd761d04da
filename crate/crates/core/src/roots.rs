//! Scalar root finding on a sign-changing bracket.

use crate::error::{Error, Result};

const MAX_ITER: usize = 400;

/// Newton's method kept inside `[lo, hi]`, falling back to bisection whenever
/// the Newton step leaves the bracket or fails to halve it.
///
/// `f` returns `(value, derivative)`. The bracket must satisfy
/// `f(lo) * f(hi) <= 0`. Iterates until the bracket collapses to adjacent
/// floats or the function vanishes.
pub(crate) fn newton_bracketed<F>(f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoConvergence(format!("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")));
    }
    // orient so that f(lo) < 0 < f(hi)
    let increasing = f_lo < 0.0;

    let mut x = 0.5 * (lo + hi);
    let mut step_old = hi - lo;
    let mut step = step_old;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let use_newton =
            dfx != 0.0 && dfx.is_finite() && newton > lo && newton < hi && (fx / dfx).abs() * 2.0 < step_old.abs();
        step_old = step;
        let next = if use_newton {
            step = fx / dfx;
            newton
        } else {
            step = 0.5 * (hi - lo);
            lo + step
        };
        if next == x || next <= lo || next >= hi {
            // bracket exhausted at floating-point resolution
            let (f_l, _) = f(lo);
            let (f_h, _) = f(hi);
            let candidates = [(x, fx.abs()), (lo, f_l.abs()), (hi, f_h.abs())];
            let best = candidates.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|c| c.0).unwrap_or(x);
            return Ok(best);
        }
        x = next;
        if (hi - lo) <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(format!("bracketed Newton did not converge on [{lo}, {hi}]")))
}

/// Expands `hi` geometrically (by `factor` steps away from `lo`) until
/// `f(hi)` has the sign of `target_sign`.
pub(crate) fn expand_upper<F>(f: F, lo: f64, initial_width: f64, target_sign: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut width = initial_width.max(1e-12);
    for _ in 0..200 {
        let hi = lo + width;
        let v = f(hi);
        if v == 0.0 || v.signum() == target_sign {
            return Ok(hi);
        }
        width *= 2.0;
    }
    Err(Error::NoConvergence(format!("could not bracket a root above {lo}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = newton_bracketed(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn survives_zero_derivative() {
        // f'(0) = 0 at the midpoint start; bisection must take over
        let r = newton_bracketed(|x| (x * x * x, 3.0 * x * x), -1.0, 1.0).unwrap();
        assert!(r.abs() < 1e-100 || r.powi(3).abs() < 1e-300);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(newton_bracketed(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0).is_err());
    }

    #[test]
    fn expands_until_sign_change() {
        let hi = expand_upper(|x| x - 37.0, 0.0, 1.0, 1.0).unwrap();
        assert!(hi >= 37.0);
    }
}
