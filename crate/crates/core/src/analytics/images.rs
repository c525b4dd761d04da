//! First hitting of the Lambert-type images boundary f on [0, T′] by a
//! Brownian motion started at 0.

use super::{Condition, CrossingResult};
use crate::barriers::{BarrierSpec, Family};
use crate::error::{domain, Error, Result};
use crate::image_measure::ImageMeasure;
use crate::special_fns::{norm_cdf, norm_pdf};

/// Tolerance on |∫ exp((2 f(t) v − v²)/(2t)) dμ(v) − 1|.
pub const IMAGES_CONDITION_TOL: f64 = 1e-9;

const CONDITION_POINTS: usize = 1000;

/// `n` equally spaced times T′k/n, k = 1..n.
pub fn images_condition_grid(horizon: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

fn images_params(spec: &BarrierSpec) -> Result<(f64, f64)> {
    match *spec.family() {
        Family::ImagesLambert { a, b } => Ok((a, b)),
        ref f => Err(domain(format!("needs an images-lambert barrier, got {}", f.name()))),
    }
}

/// max over `grid` of |∫ exp((2 f(t) v − v²)/(2t)) dμ(v) − 1|.
pub fn images_condition_deviation(spec: &BarrierSpec, m: &ImageMeasure, grid: &[f64]) -> Result<f64> {
    images_params(spec)?;
    let mut worst = 0.0f64;
    for &t in grid {
        if !(t > 0.0 && t <= spec.horizon()) {
            return Err(domain(format!("images condition grid time {t} outside (0, T']")));
        }
        let dev = (m.images_pairing(spec.upper(t)?, t) - 1.0).abs();
        worst = if dev.is_nan() { f64::INFINITY } else { worst.max(dev) };
    }
    Ok(worst)
}

fn check_time(spec: &BarrierSpec, big_t: f64) -> Result<()> {
    if big_t > 0.0 && big_t <= spec.horizon() {
        Ok(())
    } else {
        Err(domain(format!("images crossing needs 0 < T <= T' (T = {big_t}, T' = {})", spec.horizon())))
    }
}

fn conditions(spec: &BarrierSpec, m: &ImageMeasure, f_t: f64) -> Result<Vec<Condition>> {
    let grid = images_condition_grid(spec.horizon(), CONDITION_POINTS);
    let dev = images_condition_deviation(spec, m, &grid)?;
    let f0 = spec.upper(0.0)?;
    let support = m.support_min();
    let mut out = vec![
        Condition::new(
            format!("images condition holds on (0, T'] (max deviation {dev:e})"),
            dev < IMAGES_CONDITION_TOL,
        ),
        Condition::new(format!("support of mu in (f(0), inf) (min {support}, f(0) = {f0})"), support > f0),
    ];
    if let Family::ImagesLambert { a, .. } = *spec.family() {
        out.push(Condition::new(format!("a - f(T) > 0 (= {})", a - f_t), a - f_t > 0.0));
    }
    Ok(out)
}

/// P(τ < T) = N(−f(T)/√T) + U(f(T), 0; μ) for 0 < T ≤ T′, where μ must
/// satisfy the images condition along f.
pub fn images_crossing(spec: &BarrierSpec, m: &ImageMeasure, big_t: f64) -> Result<CrossingResult> {
    images_params(spec)?;
    check_time(spec, big_t)?;
    let f_t = spec.upper(big_t)?;
    let conds = conditions(spec, m, f_t)?;
    CrossingResult::guarded("N(-f(T)/sqrt T) + U(f(T), 0; mu)", conds, || Ok(crossing_unchecked(m, f_t, big_t)))
}

pub(crate) fn crossing_unchecked(m: &ImageMeasure, f_t: f64, big_t: f64) -> f64 {
    let m_t = m.with_horizon(big_t).expect("positive horizon");
    norm_cdf(-f_t / big_t.sqrt()) + m_t.u_eval(f_t, 0.0)
}

pub(crate) fn pdf_unchecked(m: &ImageMeasure, f_t: f64, big_t: f64) -> f64 {
    m.images_density_pairing(f_t, big_t) / (2.0 * big_t.powf(1.5))
}

/// Refuses with a precondition error unless every images condition holds.
pub(crate) fn require_conditions(spec: &BarrierSpec, m: &ImageMeasure) -> Result<()> {
    let f_end = spec.upper(spec.horizon())?;
    let failed: Vec<String> =
        conditions(spec, m, f_end)?.into_iter().filter(|c| !c.satisfied).map(|c| c.text).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Precondition(failed.join("; ")))
    }
}

/// ∂/∂T P(τ < T) = (1/(2T^{3/2})) ∫ v N′((f(T) − v)/√T) dμ(v).
pub fn images_hitting_pdf(spec: &BarrierSpec, m: &ImageMeasure, big_t: f64) -> Result<f64> {
    images_params(spec)?;
    check_time(spec, big_t)?;
    require_conditions(spec, m)?;
    Ok(pdf_unchecked(m, spec.upper(big_t)?, big_t))
}

/// N(−f(T)/√T) + √T/(a − f(T)) N′(f(T)/√T) for μ = b δ′_a.
pub fn images_crossing_closed_form(spec: &BarrierSpec, big_t: f64) -> Result<f64> {
    let (a, _) = images_params(spec)?;
    check_time(spec, big_t)?;
    let f = spec.upper(big_t)?;
    let st = big_t.sqrt();
    Ok(norm_cdf(-f / st) + st / (a - f) * norm_pdf(f / st))
}

/// (1/(2T^{3/2})) (a − T/(a − f(T))) N′(f(T)/√T) for μ = b δ′_a.
pub fn images_hitting_pdf_closed_form(spec: &BarrierSpec, big_t: f64) -> Result<f64> {
    let (a, _) = images_params(spec)?;
    check_time(spec, big_t)?;
    let f = spec.upper(big_t)?;
    Ok((a - big_t / (a - f)) * norm_pdf(f / big_t.sqrt()) / (2.0 * big_t.powf(1.5)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> BarrierSpec {
        BarrierSpec::images_lambert(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn condition_holds_for_family_measure() {
        let s = spec();
        let m = s.measure().unwrap();
        let dev = images_condition_deviation(&s, &m, &images_condition_grid(1.0, 1000)).unwrap();
        assert!(dev < 1e-9, "{dev}");
        // an independent spelling of the same pairing for b δ′_a
        for t in [0.01, 0.3, 1.0] {
            let f = s.upper(t).unwrap();
            let v = -2.0 * ((f - 1.0) / t) * ((2.0 * f - 1.0) / (2.0 * t)).exp();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn general_and_closed_forms_agree() {
        let s = spec();
        let m = s.measure().unwrap();
        for big_t in [0.05, 0.3, 0.7, 1.0] {
            let g = images_crossing(&s, &m, big_t).unwrap().probability.unwrap();
            let c = images_crossing_closed_form(&s, big_t).unwrap();
            assert!((g - c).abs() < 1e-13, "T={big_t}: {g} vs {c}");
            let gp = images_hitting_pdf(&s, &m, big_t).unwrap();
            let cp = images_hitting_pdf_closed_form(&s, big_t).unwrap();
            assert!((gp - cp).abs() < 1e-12 * cp.abs().max(1.0), "T={big_t}: {gp} vs {cp}");
        }
    }

    #[test]
    fn crossing_value_and_small_horizon() {
        let s = spec();
        let m = s.measure().unwrap();
        let p = images_crossing(&s, &m, 1.0).unwrap().probability.unwrap();
        // f(1) = 1 + W₋₁(−e^{−1/2}/2)
        let y = crate::special_fns::lambert_w(crate::special_fns::Branch::Lower, -(-0.5f64).exp() / 2.0).unwrap();
        let f = 1.0 + y;
        let expected = norm_cdf(-f) + norm_pdf(f) / (1.0 - f);
        assert!((p - expected).abs() < 1e-14);
        let tiny = images_crossing(&s, &m, 1e-4).unwrap().probability.unwrap();
        assert!(tiny < 1e-100);
        assert!(images_hitting_pdf(&s, &m, 1e-3).unwrap() < 1e-20);
    }

    #[test]
    fn pdf_matches_differences_of_crossing() {
        let s = spec();
        let m = s.measure().unwrap();
        let h = 1e-5;
        for big_t in [0.2, 0.5, 0.9] {
            let up = images_crossing(&s, &m, big_t + h).unwrap().probability.unwrap();
            let dn = images_crossing(&s, &m, big_t - h).unwrap().probability.unwrap();
            let fd = (up - dn) / (2.0 * h);
            let p = images_hitting_pdf(&s, &m, big_t).unwrap();
            assert!(((fd - p) / p).abs() < 1e-5, "T={big_t}: {fd} vs {p}");
        }
    }

    #[test]
    fn wrong_measure_is_refused() {
        let s = spec();
        let bad = ImageMeasure::atom(1.0, 1, 2.5, 1.0).unwrap();
        let r = images_crossing(&s, &bad, 0.5).unwrap();
        assert!(!r.conditions_met);
        assert!(matches!(images_hitting_pdf(&s, &bad, 0.5), Err(Error::Precondition(_))));
        assert!(images_crossing(&s, &s.measure().unwrap(), 1.5).is_err());
    }
}
