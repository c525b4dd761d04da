//! Closed-form crossing probabilities, last-exit distributions and
//! first-hitting densities.

mod curve;
mod images;
mod last_exit;
mod two_sided;

use serde::Serialize;

pub use curve::{DensityCurve, DensityKind, DEFAULT_INVERTED_SPAN, ENDPOINT_CLIP};
pub use images::{
    images_condition_deviation, images_condition_grid, images_crossing, images_crossing_closed_form,
    images_hitting_pdf, images_hitting_pdf_closed_form, IMAGES_CONDITION_TOL,
};
pub use last_exit::{
    hitting_cdf_inverted, hitting_pdf_inverted, inverted_sqrt_hitting_pdf, lambda_cdf, lambda_pdf, lambda_pdf_general,
    log_remaining_sigma_cdf, sigma_cdf, sigma_pdf, sigma_pdf_general,
};
pub use two_sided::{
    constant_two_sided_crossing, two_sided_sigma_cdf, two_sided_sigma_pdf, two_sided_sigma_pdf_general, SERIES_TOL,
};

use crate::barriers::{BarrierSpec, Family};
use crate::error::{domain, Result};
use crate::image_measure::{identity_grid, verify_barrier_identity, ImageMeasure};
use crate::special_fns::{exp_times_norm_cdf, hermite_eval, hermite_largest_zero, norm_cdf};

/// Tolerance on |U(g(t), t; μ) − 1| accepted by the generic image route.
pub const IDENTITY_TOL: f64 = 1e-9;

/// One parameter condition and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub text: String,
    pub satisfied: bool,
}

impl Condition {
    pub fn new(text: impl Into<String>, satisfied: bool) -> Self {
        Self { text: text.into(), satisfied }
    }
}

/// A crossing probability together with the conditions under which its
/// formula is valid. The probability is absent whenever a condition fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingResult {
    pub probability: Option<f64>,
    pub conditions_met: bool,
    pub condition_report: Vec<Condition>,
    pub formula: String,
}

impl CrossingResult {
    /// Evaluates `value` only when every condition holds.
    pub fn guarded(
        formula: impl Into<String>,
        conditions: Vec<Condition>,
        value: impl FnOnce() -> Result<f64>,
    ) -> Result<Self> {
        let ok = conditions.iter().all(|c| c.satisfied);
        let probability = if ok { Some(value()?) } else { None };
        Ok(Self { probability, conditions_met: ok, condition_report: conditions, formula: formula.into() })
    }

    /// The texts of the conditions that failed.
    pub fn violations(&self) -> Vec<&str> {
        self.condition_report.iter().filter(|c| !c.satisfied).map(|c| c.text.as_str()).collect()
    }
}

/// P(τ(start) < T) for any barrier family.
///
/// One-sided families on [0, T] are translated so that the path starts at
/// 0; the inverted and images families only support a start at 0; two-sided
/// families need the start strictly between the two barriers.
pub fn crossing_prob(spec: &BarrierSpec, start: f64) -> Result<CrossingResult> {
    if !start.is_finite() {
        return Err(domain(format!("start must be finite, got {start}")));
    }
    match spec.family() {
        Family::Linear { .. } | Family::SqrtRemaining { .. } | Family::LogRemaining { .. } | Family::Hermite { .. }
            if start != 0.0 =>
        {
            let shifted = spec.translated(start).expect("one-sided families translate");
            crossing_prob(&shifted, 0.0)
        }
        &Family::Linear { a, b } => {
            let big_t = spec.horizon();
            let st = big_t.sqrt();
            CrossingResult::guarded(
                "N((-a-bT)/sqrt T) + exp(-2ab) N((bT-a)/sqrt T)",
                vec![Condition::new(format!("a >= 0 (a = {a})"), a >= 0.0)],
                || {
                    Ok((norm_cdf((-a - b * big_t) / st) + exp_times_norm_cdf(-2.0 * a * b, (b * big_t - a) / st))
                        .min(1.0))
                },
            )
        }
        &Family::SqrtRemaining { a, b } => {
            let big_t = spec.horizon();
            let g0 = a + b * big_t.sqrt();
            CrossingResult::guarded(
                "N(-a/sqrt T) / N(b)",
                vec![Condition::new(format!("a + b sqrt T >= 0 (= {g0})"), g0 >= 0.0)],
                || Ok(norm_cdf(-a / big_t.sqrt()) / norm_cdf(b)),
            )
        }
        &Family::LogRemaining { a, b } => {
            let big_t = spec.horizon();
            let need = (big_t * (b / big_t).ln()).sqrt();
            CrossingResult::guarded(
                "sqrt(b/T) exp(-a^2/(2T))",
                vec![Condition::new(format!("a >= sqrt(T ln(b/T)) = {need} (a = {a})"), a >= need)],
                || Ok((b / big_t).sqrt() * (-a * a / (2.0 * big_t)).exp()),
            )
        }
        &Family::Hermite { a, b, n } => {
            let big_t = spec.horizon();
            let st = big_t.sqrt();
            let z = hermite_largest_zero(n);
            let value = b * big_t.powf(-0.5 * n as f64) * hermite_eval(n - 1, a / st) * (-a * a / (2.0 * big_t)).exp();
            CrossingResult::guarded(
                "b T^(-n/2) H_(n-1)(a/sqrt T) exp(-a^2/(2T))",
                vec![
                    Condition::new(format!("a >= z_n sqrt T = {} (a = {a})", z * st), a >= z * st),
                    Condition::new(
                        format!("b T^(-n/2) H_(n-1)(a/sqrt T) exp(-a^2/(2T)) <= 1 (= {value})"),
                        value <= 1.0,
                    ),
                ],
                || Ok(value),
            )
        }
        Family::TimeInverted { base } => {
            let g0 = base.upper(0.0)?;
            let inner = crossing_prob(base, 0.0)?;
            let mut conditions = vec![
                Condition::new(format!("start = 0 (start = {start})"), start == 0.0),
                Condition::new(format!("base barrier g(0) > 0 (g(0) = {g0})"), g0 > 0.0),
            ];
            conditions.extend(inner.condition_report.iter().cloned());
            CrossingResult::guarded(format!("same as the base barrier: {}", inner.formula), conditions, || {
                Ok(inner.probability.expect("base conditions are part of the report"))
            })
        }
        &Family::TwoSidedConstant { a, b } => {
            let inside = b < start && start < a;
            let mut terms = 0;
            let result = CrossingResult::guarded(
                "2 sum_j (-1)^j [N((u-a-j(a-b))/sqrt T) + N((b-u-j(a-b))/sqrt T)]",
                vec![Condition::new(format!("b < start < a ({b} < {start} < {a})"), inside)],
                || {
                    let (p, n) = constant_two_sided_crossing(a, b, start, spec.horizon());
                    terms = n;
                    Ok(p)
                },
            )?;
            Ok(annotate_series(result, terms))
        }
        &Family::TwoSidedCurved { a, b, c } => {
            let (g0, g1) = spec.curved_two_sided(0.0)?;
            let st = spec.horizon().sqrt();
            CrossingResult::guarded(
                "c^-1 N((u-a)/sqrt T) + c^-1 N((b-u)/sqrt T)",
                vec![Condition::new(
                    format!("g1(0) < start < g0(0) ({g1} < {start} < {g0})"),
                    g1 < start && start < g0,
                )],
                || Ok((norm_cdf((start - a) / st) + norm_cdf((b - start) / st)) / c),
            )
        }
        Family::ImagesLambert { .. } => {
            if start != 0.0 {
                return CrossingResult::guarded(
                    "N(-f(T)/sqrt T) + U(f(T), 0; mu)",
                    vec![Condition::new(format!("start = 0 (start = {start})"), false)],
                    || unreachable!(),
                );
            }
            images_crossing(spec, &spec.measure()?, spec.horizon())
        }
    }
}

fn annotate_series(mut r: CrossingResult, terms: usize) -> CrossingResult {
    if r.conditions_met {
        r.condition_report
            .push(Condition::new(format!("series truncated after {terms} terms with |term| < {SERIES_TOL:e}"), true));
    }
    r
}

/// Crossing probability U(start, 0; μ) of an arbitrary barrier g on [0, T]
/// with a candidate image measure μ.
///
/// The formula is only returned when the measure passes four checks on
/// `grid`: U(g(t), t; μ) = 1, U(w, t; μ) bounded for w ≤ g(t), support of
/// μ in [g(T), ∞), and start ≤ g(0).
pub fn image_crossing<G>(g: G, m: &ImageMeasure, start: f64, grid: Option<&[f64]>) -> Result<CrossingResult>
where
    G: Fn(f64) -> f64,
{
    let big_t = m.horizon();
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            default_grid = identity_grid(big_t, 1000);
            &default_grid
        }
    };
    let report = verify_barrier_identity(m, &g, grid)?;
    let gt = g(big_t);
    let g0 = g(0.0);
    let support = m.support_min();
    let conditions = vec![
        Condition::new(
            format!("U(g(t), t; mu) = 1 on the grid (max deviation {:e})", report.max_abs_deviation),
            report.max_abs_deviation < IDENTITY_TOL,
        ),
        Condition::new(
            format!(
                "|U(w, t; mu)| bounded for w <= g(t) (max {:.6} overall, {:.6} away from T)",
                report.empirical_bound, report.bound_away_from_horizon
            ),
            report.bounded,
        ),
        Condition::new(
            format!("support of mu in [g(T), inf) (min {support}, g(T) = {gt})"),
            support >= gt - 1e-12 * gt.abs().max(1.0),
        ),
        Condition::new(format!("start <= g(0) ({start} <= {g0})"), start <= g0),
    ];
    CrossingResult::guarded("U(start, 0; mu)", conditions, || Ok(m.u_eval(start, 0.0)))
}

/// Agreement of a central difference quotient (step 1e-5) with a density:
/// relative error below 1e-5, above an absolute floor of 1e-10 that covers
/// the rounding noise of differencing probabilities of order one.
#[cfg(test)]
pub(crate) fn fd_close(fd: f64, p: f64) -> bool {
    (fd - p).abs() <= 1e-5 * p.abs() + 1e-10
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::mirrored_log_remaining;
    use std::f64::consts::E;

    fn prob(spec: &BarrierSpec) -> f64 {
        crossing_prob(spec, 0.0).unwrap().probability.unwrap()
    }

    #[test]
    fn reference_values() {
        assert_eq!(prob(&BarrierSpec::linear(0.0, 1.7, 1.0).unwrap()), 1.0);
        let lin = prob(&BarrierSpec::linear(1.0, 0.0, 1.0).unwrap());
        assert!((lin - 2.0 * norm_cdf(-1.0)).abs() < 1e-15);
        let sq = prob(&BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0).unwrap());
        assert!((sq - norm_cdf(-1.0) / norm_cdf(1.0)).abs() < 1e-16);
        let lg = prob(&BarrierSpec::log_remaining(1.5, E, 1.0).unwrap());
        assert!((lg - (-0.625f64).exp()).abs() < 1e-15);
    }

    /// P(sup_{s≤T} (W_s − b s) ≥ a) by the reflection principle for drifted
    /// Brownian motion, written independently of the library formula.
    #[test]
    fn linear_against_drifted_reflection() {
        for (a, b, big_t) in [(1.0, 0.3, 1.0), (0.4, -0.8, 2.0), (2.0, 1.5, 0.5)] {
            let st: f64 = f64::sqrt(big_t);
            let mu = -b;
            let expected =
                1.0 - norm_cdf((a - mu * big_t) / st) + (2.0 * mu * a).exp() * norm_cdf((-a - mu * big_t) / st);
            let v = prob(&BarrierSpec::linear(a, b, big_t).unwrap());
            assert!((v - expected).abs() < 1e-14, "{a} {b} {big_t}: {v} vs {expected}");
        }
    }

    #[test]
    fn refusals_carry_reports() {
        let r = crossing_prob(&BarrierSpec::log_remaining(0.5, E, 1.0).unwrap(), 0.0).unwrap();
        assert!(!r.conditions_met && r.probability.is_none());
        assert_eq!(r.violations().len(), 1);
        assert!(r.violations()[0].contains("a >= sqrt(T ln(b/T))"));
        let h = crossing_prob(&BarrierSpec::hermite(2.0, 10.0, 2, 1.0).unwrap(), 0.0).unwrap();
        assert!(!h.conditions_met);
        let lin = crossing_prob(&BarrierSpec::linear(1.0, 0.0, 1.0).unwrap(), 1.5).unwrap();
        assert!(!lin.conditions_met);
    }

    #[test]
    fn translation_is_exact() {
        let s = BarrierSpec::hermite(3.0, 10.0, 2, 1.0).unwrap();
        let a = crossing_prob(&s, 0.4).unwrap().probability.unwrap();
        let b = prob(&BarrierSpec::hermite(2.6, 10.0, 2, 1.0).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn log_and_hermite_order_one_agree() {
        let b = 2.0f64;
        let l = prob(&BarrierSpec::log_remaining(1.6, b * b, 1.0).unwrap());
        let h = prob(&BarrierSpec::hermite(1.6, b, 1, 1.0).unwrap());
        assert!((l - h).abs() < 1e-12);
    }

    #[test]
    fn time_inverted_matches_base_exactly() {
        let base = BarrierSpec::sqrt_remaining(1.0, 1.0, 1.0).unwrap();
        let inv = BarrierSpec::time_inverted(base.clone()).unwrap();
        assert_eq!(prob(&inv), prob(&base));
        // a base touching the start is refused
        let touching = BarrierSpec::time_inverted(BarrierSpec::sqrt_remaining(1.0, -1.0, 1.0).unwrap()).unwrap();
        assert!(!crossing_prob(&touching, 0.0).unwrap().conditions_met);
    }

    #[test]
    fn two_sided_values() {
        let c = prob(&BarrierSpec::two_sided_curved(1.0, -1.0, 0.5, 1.0).unwrap());
        assert!((c - 2.0 * norm_cdf(-1.0) / 0.5).abs() < 1e-15);
        let r = crossing_prob(&BarrierSpec::two_sided_constant(1.0, -1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(!r.conditions_met);
    }

    #[test]
    fn generic_route_matches_family_formulas() {
        let s = BarrierSpec::sqrt_remaining(1.0, 0.5, 1.0).unwrap();
        let m = s.measure().unwrap();
        let r = image_crossing(|t| s.upper(t).unwrap(), &m, 0.0, None).unwrap();
        assert!(r.conditions_met, "{:?}", r.condition_report);
        assert!((r.probability.unwrap() - prob(&s)).abs() < 1e-15);
        let l = BarrierSpec::linear(0.8, -0.4, 1.0).unwrap();
        let r = image_crossing(|t| l.upper(t).unwrap(), &l.measure().unwrap(), 0.0, None).unwrap();
        assert!(r.conditions_met, "{:?}", r.condition_report);
        assert!((r.probability.unwrap() - prob(&l)).abs() < 1e-14);
    }

    #[test]
    fn mirrored_log_barrier_is_refused() {
        let s = BarrierSpec::log_remaining(1.5, E, 1.0).unwrap();
        let m = s.measure().unwrap();
        let r = image_crossing(mirrored_log_remaining(1.5, E, 1.0), &m, 0.0, None).unwrap();
        assert!(r.condition_report[0].satisfied, "identity should hold: {:?}", r.condition_report);
        assert!(!r.condition_report[1].satisfied);
        assert!(r.probability.is_none());
    }
}
