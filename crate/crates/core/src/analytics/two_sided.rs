//! Two-sided barriers: constant strip and the curved family built from a
//! pair of Dirac atoms.

use std::f64::consts::PI;

use crate::barriers::{BarrierSpec, Family};
use crate::error::{domain, Result};
use crate::special_fns::{bivariate_norm_cdf, norm_cdf, norm_pdf, Correlation};

/// Alternating series stop once a term falls below this, at an even index.
pub const SERIES_TOL: f64 = 1e-15;

const MAX_TERMS: usize = 1_000_000;

fn stop(term: f64, j: usize) -> bool {
    (term.abs() < SERIES_TOL && j.is_multiple_of(2)) || j >= MAX_TERMS
}

/// Crossing probability of the strip b < u < a from `start`, by the images
/// series 2Σ(−1)ʲ[N((u − a − jL)/√T) + N((b − u − jL)/√T)], L = a − b.
/// Returns the value and the number of terms used.
pub fn constant_two_sided_crossing(a: f64, b: f64, start: f64, big_t: f64) -> (f64, usize) {
    let l = a - b;
    let st = big_t.sqrt();
    let mut sum = 0.0;
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        let term = norm_cdf((start - a - jf * l) / st) + norm_cdf((b - start - jf * l) / st);
        sum += if j.is_multiple_of(2) { term } else { -term };
        if stop(term, j) {
            break;
        }
        j += 1;
    }
    (2.0 * sum, j + 1)
}

/// Weighted atoms (location, weight) of the upper and lower image measures.
/// For the constant strip the alternating sequences are truncated once
/// every further atom contributes below the series tolerance.
fn atoms(spec: &BarrierSpec) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let st = spec.horizon().sqrt();
    match *spec.family() {
        Family::TwoSidedCurved { a, b, c } => Ok((vec![(a, 1.0 / c)], vec![(b, 1.0 / c)])),
        Family::TwoSidedConstant { a, b } => {
            let l = a - b;
            let (mut upper, mut lower) = (Vec::new(), Vec::new());
            let mut j = 0usize;
            loop {
                let w = if j.is_multiple_of(2) { 2.0 } else { -2.0 };
                let (vu, vl) = (a + j as f64 * l, b - j as f64 * l);
                upper.push((vu, w));
                lower.push((vl, w));
                let size = norm_cdf(-vu / st).max(norm_cdf(vl / st));
                if stop(size, j) {
                    break;
                }
                j += 1;
            }
            Ok((upper, lower))
        }
        ref f => Err(domain(format!("needs a two-sided barrier, got {}", f.name()))),
    }
}

fn window(spec: &BarrierSpec, t: f64, closed: bool) -> Result<()> {
    let big_t = spec.horizon();
    let ok = t > 0.0 && if closed { t <= big_t } else { t < big_t };
    if ok {
        Ok(())
    } else {
        Err(domain(format!("t = {t} outside the admissible range of (0, {big_t}]")))
    }
}

/// P(σ ≤ t), σ = sup{s ∈ (0, T] : W_s ≥ g₀(s) or W_s ≤ g₁(s)}, for
/// 0 < t ≤ T.
pub fn two_sided_sigma_cdf(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let (upper, lower) = atoms(spec)?;
    window(spec, t, true)?;
    let big_t = spec.horizon();
    let st = big_t.sqrt();
    let r = (t / big_t).sqrt().min(1.0);
    let neg = Correlation::new(-r)?;
    let pos = Correlation::new(r)?;
    let (g0, g1) = barrier_pair(spec, t)?;
    let part = |g: f64| {
        let x = g / t.sqrt();
        let up: f64 = upper.iter().map(|&(v, w)| w * bivariate_norm_cdf(x, -v / st, neg)).sum();
        let lo: f64 = lower.iter().map(|&(v, w)| w * bivariate_norm_cdf(x, v / st, pos)).sum();
        norm_cdf(x) - up - lo
    };
    Ok((part(g0) - part(g1)).clamp(0.0, 1.0))
}

fn barrier_pair(spec: &BarrierSpec, t: f64) -> Result<(f64, f64)> {
    match spec.eval(t)? {
        crate::barriers::BarrierValue::Two { upper, lower } => Ok((upper, lower)),
        crate::barriers::BarrierValue::One(_) => Err(domain("expected a two-sided barrier")),
    }
}

/// d/dt P(σ ≤ t) for 0 < t < T, from the per-family closed forms.
pub fn two_sided_sigma_pdf(spec: &BarrierSpec, t: f64) -> Result<f64> {
    atoms(spec)?;
    window(spec, t, false)?;
    let big_t = spec.horizon();
    let rem = big_t - t;
    let st = t.sqrt();
    match *spec.family() {
        Family::TwoSidedConstant { a, b } => {
            let l2 = (a - b) * (a - b);
            let mut theta = 1.0;
            let mut j = 1usize;
            loop {
                let jf = j as f64;
                let term = (-jf * jf * l2 / (2.0 * rem)).exp();
                theta += if j.is_multiple_of(2) { 2.0 * term } else { -2.0 * term };
                if stop(term, j) {
                    break;
                }
                j += 1;
            }
            Ok((norm_pdf(a / st) + norm_pdf(b / st)) * theta / (2.0 * PI * t * rem).sqrt())
        }
        Family::TwoSidedCurved { a, b, c } => {
            let (g0, g1) = spec.curved_two_sided(t)?;
            let s = rem.sqrt();
            Ok((norm_pdf(g0 / st) + norm_pdf(g1 / st)) * (norm_pdf((g0 - a) / s) - norm_pdf((g0 - b) / s))
                / (2.0 * c * (t * rem).sqrt()))
        }
        _ => unreachable!("checked by atoms"),
    }
}

/// d/dt P(σ ≤ t) through the image measures:
/// Σᵢ (−1)ⁱ/(2√t) N′(gᵢ(t)/√t) U(gᵢ(t), t; μ₀′ − μ₁′).
pub fn two_sided_sigma_pdf_general(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let (upper, lower) = atoms(spec)?;
    window(spec, t, false)?;
    let s = (spec.horizon() - t).sqrt();
    let (g0, g1) = barrier_pair(spec, t)?;
    let u_diff = |u: f64| {
        let up: f64 = upper.iter().map(|&(v, w)| w * norm_pdf((u - v) / s)).sum();
        let lo: f64 = lower.iter().map(|&(v, w)| w * norm_pdf((u - v) / s)).sum();
        (up - lo) / s
    };
    let st = t.sqrt();
    Ok((norm_pdf(g0 / st) * u_diff(g0) - norm_pdf(g1 / st) * u_diff(g1)) / (2.0 * st))
}
