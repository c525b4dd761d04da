//! Barrier families, their evaluation (closed form or root-solved) and the
//! image measures that pair with them.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::image_measure::{Atom, ExpComponent, ImageMeasure};
use crate::roots::{expand_upper, newton_bracketed};
use crate::special_fns::{hermite_eval, hermite_largest_zero, lambert_w_lower_from_log, norm_cdf, norm_pdf};

/// Relative slack allowed when a parameter sits exactly on a boundary of
/// its admissible region.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Below this time the images boundary is reported by its limit a/2.
pub const IMAGES_SMALL_T: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// g(t) = a + b t
    Linear { a: f64, b: f64 },
    /// g(t) = a + b √(T − t)
    SqrtRemaining { a: f64, b: f64 },
    /// g(t) = a − √((T − t) ln(b/(T − t))), b ≥ T
    LogRemaining { a: f64, b: f64 },
    /// g(t) = a − √(T − t) x(t), x(t) the largest root of
    /// H_{n−1}(x) e^{−x²/2} = (T − t)^{n/2}/b
    Hermite { a: f64, b: f64, n: u32 },
    /// ĝ(t) = (t/T) g(T²/t) on [T, ∞)
    TimeInverted { base: Box<BarrierSpec> },
    /// g₀ ≡ a above, g₁ ≡ b below
    TwoSidedConstant { a: f64, b: f64 },
    /// g₀(t) the largest root of N((w − a)/√(T − t)) + N((b − w)/√(T − t)) = c,
    /// g₁ = a + b − g₀
    TwoSidedCurved { a: f64, b: f64, c: f64 },
    /// f(t) = a + t y(t)/a with y(t) = W₋₁(−(a/b) e^{−a²/(2t)}), f(0) = a/2
    ImagesLambert { a: f64, b: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Linear { .. } => "linear",
            Family::SqrtRemaining { .. } => "sqrt-remaining",
            Family::LogRemaining { .. } => "log-remaining",
            Family::Hermite { .. } => "hermite",
            Family::TimeInverted { .. } => "time-inverted",
            Family::TwoSidedConstant { .. } => "two-sided-constant",
            Family::TwoSidedCurved { .. } => "two-sided-curved",
            Family::ImagesLambert { .. } => "images-lambert",
        }
    }
}

/// A barrier family with its parameters and horizon T. Construct through the
/// family-specific constructors, which enforce the parameter constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSpec {
    #[serde(flatten)]
    family: Family,
    horizon: f64,
}

/// Barrier value at one time: a single curve, or an (upper, lower) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BarrierValue {
    One(f64),
    Two { upper: f64, lower: f64 },
}

impl BarrierValue {
    pub fn upper(self) -> f64 {
        match self {
            BarrierValue::One(v) => v,
            BarrierValue::Two { upper, .. } => upper,
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite, got {v}")))
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("horizon must be positive and finite, got {horizon}")))
    }
}

/// Smallest admissible b for the Hermite family: e^{z_n²/2} T^{n/2} / H_{n−1}(z_n).
pub fn hermite_min_b(n: u32, horizon: f64) -> f64 {
    let z = hermite_largest_zero(n);
    (0.5 * z * z).exp() * horizon.powf(0.5 * n as f64) / hermite_eval(n - 1, z)
}

/// Smallest admissible b for the images family: a e^{1 − a²/(2T′)}.
pub fn images_min_b(a: f64, horizon: f64) -> f64 {
    a * (1.0 - a * a / (2.0 * horizon)).exp()
}

impl BarrierSpec {
    pub fn linear(a: f64, b: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        Ok(Self { family: Family::Linear { a, b }, horizon })
    }

    pub fn sqrt_remaining(a: f64, b: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        Ok(Self { family: Family::SqrtRemaining { a, b }, horizon })
    }

    pub fn log_remaining(a: f64, b: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        if b < horizon {
            return Err(domain(format!("log-remaining needs b >= T (b = {b}, T = {horizon})")));
        }
        Ok(Self { family: Family::LogRemaining { a, b }, horizon })
    }

    pub fn hermite(a: f64, b: f64, n: u32, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        if n == 0 {
            return Err(domain("hermite family needs n >= 1"));
        }
        let min_b = hermite_min_b(n, horizon);
        if b < min_b * (1.0 - BOUNDARY_SLACK) {
            return Err(domain(format!(
                "hermite family needs b >= exp(z_n^2/2) T^(n/2) / H_(n-1)(z_n) = {min_b} (b = {b})"
            )));
        }
        Ok(Self { family: Family::Hermite { a, b, n }, horizon })
    }

    pub fn two_sided_constant(a: f64, b: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        if b >= a {
            return Err(domain(format!("two-sided barrier needs b < a (a = {a}, b = {b})")));
        }
        Ok(Self { family: Family::TwoSidedConstant { a, b }, horizon })
    }

    pub fn two_sided_curved(a: f64, b: f64, c: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        if b >= a {
            return Err(domain(format!("two-sided barrier needs b < a (a = {a}, b = {b})")));
        }
        let lo = 2.0 * norm_cdf((b - a) / (2.0 * horizon.sqrt()));
        if !(c > lo && c < 1.0) {
            return Err(domain(format!(
                "curved two-sided barrier needs 2N((b-a)/(2 sqrt T)) = {lo} < c < 1 (c = {c})"
            )));
        }
        Ok(Self { family: Family::TwoSidedCurved { a, b, c }, horizon })
    }

    pub fn images_lambert(a: f64, b: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        finite("a", a)?;
        finite("b", b)?;
        if a <= 0.0 {
            return Err(domain(format!("images barrier needs a > 0 (a = {a})")));
        }
        let min_b = images_min_b(a, horizon);
        if b < min_b * (1.0 - BOUNDARY_SLACK) {
            return Err(domain(format!("images barrier needs b >= a exp(1 - a^2/(2T')) = {min_b} (b = {b})")));
        }
        Ok(Self { family: Family::ImagesLambert { a, b }, horizon })
    }

    /// ĝ(t) = (t/T) g(T²/t) on [T, ∞). Inverting an inverted barrier returns
    /// its base.
    pub fn time_inverted(base: BarrierSpec) -> Result<Self> {
        time_invert(&base)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_two_sided(&self) -> bool {
        matches!(self.family, Family::TwoSidedConstant { .. } | Family::TwoSidedCurved { .. })
    }

    /// One-sided barriers on [0, T] whose crossing comes from an image
    /// measure supported on [g(T), ∞).
    pub fn is_one_sided_on_horizon(&self) -> bool {
        matches!(
            self.family,
            Family::Linear { .. } | Family::SqrtRemaining { .. } | Family::LogRemaining { .. } | Family::Hermite { .. }
        )
    }

    /// Closed time domain of the barrier; the inverted family lives on [T, ∞).
    pub fn time_domain(&self) -> (f64, f64) {
        match self.family {
            Family::TimeInverted { .. } => (self.horizon, f64::INFINITY),
            _ => (0.0, self.horizon),
        }
    }

    /// Value of the barrier at `t`.
    pub fn eval(&self, t: f64) -> Result<BarrierValue> {
        let (lo, hi) = self.time_domain();
        if !(t >= lo && t <= hi) {
            return Err(domain(format!("t = {t} outside the {} domain [{lo}, {hi}]", self.family.name())));
        }
        let big_t = self.horizon;
        let rem = (big_t - t).max(0.0);
        let v = match &self.family {
            Family::Linear { a, b } => BarrierValue::One(a + b * t),
            Family::SqrtRemaining { a, b } => BarrierValue::One(a + b * rem.sqrt()),
            Family::LogRemaining { a, b } => {
                if rem == 0.0 {
                    BarrierValue::One(*a)
                } else {
                    BarrierValue::One(a - (rem * (b / rem).ln()).sqrt())
                }
            }
            Family::Hermite { a, .. } => {
                if rem == 0.0 {
                    BarrierValue::One(*a)
                } else {
                    BarrierValue::One(a - rem.sqrt() * self.hermite_x(t)?)
                }
            }
            Family::TimeInverted { base } => {
                let s = big_t * big_t / t;
                // the base is evaluated at T²/t ∈ (0, T]
                let g = if t.is_infinite() {
                    return Err(domain("time-inverted barrier evaluated at infinity"));
                } else {
                    base.eval(s.min(big_t))?.upper()
                };
                BarrierValue::One(t / big_t * g)
            }
            Family::TwoSidedConstant { a, b } => BarrierValue::Two { upper: *a, lower: *b },
            Family::TwoSidedCurved { a, b, .. } => {
                let (g0, g1) = self.curved_two_sided(t)?;
                debug_assert!(g1 <= g0, "{a} {b}");
                BarrierValue::Two { upper: g0, lower: g1 }
            }
            Family::ImagesLambert { a, .. } => {
                if t < IMAGES_SMALL_T {
                    BarrierValue::One(0.5 * a)
                } else {
                    BarrierValue::One(a + t * self.images_y(t)? / a)
                }
            }
        };
        Ok(v)
    }

    /// Upper (or only) barrier value.
    pub fn upper(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.upper())
    }

    /// x(t) of the Hermite family.
    pub fn hermite_x(&self, t: f64) -> Result<f64> {
        let Family::Hermite { b, n, .. } = self.family else {
            return Err(domain("hermite_x needs a hermite barrier"));
        };
        hermite_x(n, b, self.horizon, t)
    }

    /// (g₀(t), g₁(t)) of the curved two-sided family.
    pub fn curved_two_sided(&self, t: f64) -> Result<(f64, f64)> {
        let Family::TwoSidedCurved { a, b, c } = self.family else {
            return Err(domain("curved_two_sided needs a curved two-sided barrier"));
        };
        curved_two_sided_solve(a, b, c, self.horizon, t)
    }

    /// y(t) of the images family.
    pub fn images_y(&self, t: f64) -> Result<f64> {
        let Family::ImagesLambert { a, b } = self.family else {
            return Err(domain("images_y needs an images barrier"));
        };
        if !(t > 0.0 && t <= self.horizon) {
            return Err(domain(format!("images y(t) needs 0 < t <= T' (t = {t})")));
        }
        images_lambert_y(a, b, t)
    }

    /// The same barrier shifted down by `delta`, i.e. a → a − delta (and
    /// b → b − delta for two-sided families). Crossing from `delta` equals
    /// crossing of the shifted barrier from 0. `None` for families that are
    /// not closed under translation.
    pub fn translated(&self, delta: f64) -> Option<BarrierSpec> {
        let family = match self.family {
            Family::Linear { a, b } => Family::Linear { a: a - delta, b },
            Family::SqrtRemaining { a, b } => Family::SqrtRemaining { a: a - delta, b },
            Family::LogRemaining { a, b } => Family::LogRemaining { a: a - delta, b },
            Family::Hermite { a, b, n } => Family::Hermite { a: a - delta, b, n },
            Family::TwoSidedConstant { a, b } => Family::TwoSidedConstant { a: a - delta, b: b - delta },
            Family::TwoSidedCurved { a, b, c } => Family::TwoSidedCurved { a: a - delta, b: b - delta, c },
            Family::TimeInverted { .. } | Family::ImagesLambert { .. } => return None,
        };
        Some(BarrierSpec { family, horizon: self.horizon })
    }

    /// The image measure μ paired with a one-sided barrier, so that
    /// U(g(t), t; μ) = 1 for t < T (or, for the images family, so that the
    /// images condition holds). The images family's measure uses the
    /// horizon T′; re-horizon it for crossing up to T < T′.
    pub fn measure(&self) -> Result<ImageMeasure> {
        let big_t = self.horizon;
        let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
        match self.family {
            Family::Linear { a, b } => {
                let gt = a + b * big_t;
                let exps = if b == 0.0 {
                    Vec::new()
                } else {
                    vec![ExpComponent { rate: 2.0 * b, lower: gt, upper: None, weight: 1.0 }]
                };
                ImageMeasure::new(vec![Atom::new(gt, 0, 2.0)], exps, big_t)
            }
            Family::SqrtRemaining { a, b } => ImageMeasure::atom(a, 0, 1.0 / norm_cdf(b), big_t),
            Family::LogRemaining { a, b } => ImageMeasure::atom(a, 1, (2.0 * std::f64::consts::PI * b).sqrt(), big_t),
            Family::Hermite { a, b, n } => ImageMeasure::atom(a, n, sqrt_2pi * b, big_t),
            Family::ImagesLambert { a, b } => ImageMeasure::atom(a, 1, b, big_t),
            Family::TimeInverted { .. } | Family::TwoSidedConstant { .. } | Family::TwoSidedCurved { .. } => {
                Err(domain(format!("no single image measure for the {} family", self.family.name())))
            }
        }
    }
}

/// ĝ(t) = (t/T) g(T²/t). An involution: inverting an inverted barrier
/// returns the base.
pub fn time_invert(spec: &BarrierSpec) -> Result<BarrierSpec> {
    match &spec.family {
        Family::TimeInverted { base } => Ok((**base).clone()),
        _ if spec.is_one_sided_on_horizon() => {
            Ok(BarrierSpec { family: Family::TimeInverted { base: Box::new(spec.clone()) }, horizon: spec.horizon })
        }
        f => Err(domain(format!("time inversion needs a one-sided barrier on [0, T], got {}", f.name()))),
    }
}

/// Largest x with H_{n−1}(x) e^{−x²/2} = (T − t)^{n/2}/b.
///
/// Beyond the largest Hermite zero z_n the left side decreases strictly
/// (its derivative is −H_n(x) e^{−x²/2}), so the root is bracketed by z_n
/// and a point far enough right. The equation is solved in logarithmic form
/// so that t close to T stays resolvable.
pub fn hermite_x(n: u32, b: f64, horizon: f64, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("hermite_x needs n >= 1"));
    }
    if !(t >= 0.0 && t < horizon) {
        return Err(domain(format!("hermite_x needs 0 <= t < T (t = {t})")));
    }
    let rem = horizon - t;
    let ln_rhs = 0.5 * n as f64 * rem.ln() - b.ln();
    let z = hermite_largest_zero(n);
    let f = |x: f64| hermite_eval(n - 1, x).ln() - 0.5 * x * x - ln_rhs;
    let df = |x: f64| -hermite_eval(n, x) / hermite_eval(n - 1, x);
    let f_z = f(z);
    if f_z < -1e-12 {
        return Err(domain(format!(
            "no solution of H_(n-1)(x) exp(-x^2/2) = (T-t)^(n/2)/b at t = {t}; b is below the admissible bound"
        )));
    }
    if f_z <= 0.0 {
        return Ok(z);
    }
    let guess = (-2.0 * ln_rhs).max(0.0).sqrt() + 1.0;
    let hi = expand_upper(f, z, guess, -1.0)?;
    newton_bracketed(|x| (f(x), df(x)), z, hi)
}

/// (g₀(t), g₁(t)) with g₀ the largest root of
/// F(w) = N((w − a)/√(T − t)) + N((b − w)/√(T − t)) = c and g₁ = a + b − g₀.
///
/// F is symmetric about m = (a + b)/2 and increasing on (m, ∞) from
/// 2N((b − a)/(2√(T − t))) < c up to 1 > c, so the larger root is the unique
/// root above m.
pub fn curved_two_sided_solve(a: f64, b: f64, c: f64, horizon: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0 && t <= horizon) {
        return Err(domain(format!("t = {t} outside [0, {horizon}]")));
    }
    let lo_c = 2.0 * norm_cdf((b - a) / (2.0 * horizon.sqrt()));
    if !(c > lo_c && c < 1.0) {
        return Err(domain(format!("c = {c} outside ({lo_c}, 1)")));
    }
    if t == horizon {
        return Ok((a, b));
    }
    let s = (horizon - t).sqrt();
    let m = 0.5 * (a + b);
    let f = |w: f64| {
        (norm_cdf((w - a) / s) + norm_cdf((b - w) / s) - c, (norm_pdf((w - a) / s) - norm_pdf((b - w) / s)) / s)
    };
    let hi = a.max(m) + 40.0 * s;
    let g0 = newton_bracketed(f, m, hi)?;
    Ok(symmetric_pair(g0, a + b))
}

/// (g₀, s − g₀) with g₀ moved by at most a few ulps so that the pair sums to
/// s exactly in floating point.
fn symmetric_pair(g0: f64, s: f64) -> (f64, f64) {
    let (mut up, mut down) = (g0, g0);
    for _ in 0..8 {
        for g in [up, down] {
            if g + (s - g) == s {
                return (g, s - g);
            }
        }
        up = up.next_up();
        down = down.next_down();
    }
    (g0, s - g0)
}

/// y(t) = W₋₁(−(a/b) e^{−a²/(2t)}), evaluated from the logarithm of its
/// argument so that small t does not underflow.
pub fn images_lambert_y(a: f64, b: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || a <= 0.0 || b <= 0.0 {
        return Err(domain(format!("images y(t) needs a, b, t > 0 (a = {a}, b = {b}, t = {t})")));
    }
    let l = (a / b).ln() - a * a / (2.0 * t);
    lambert_w_lower_from_log(l).map_err(|e| match e {
        Error::Domain(msg) => domain(format!("{msg}; the images parameters violate b >= a exp(1 - a^2/(2t))")),
        other => other,
    })
}

/// a + √((T − t) ln(b/(T − t))): the log-remaining barrier reflected about
/// a. It also solves U(g, t; μ) = 1 for the log-remaining measure, but μ is
/// not bounded below it, so crossing formulas do not apply.
pub fn mirrored_log_remaining(a: f64, b: f64, horizon: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| {
        let rem = horizon - t;
        if rem <= 0.0 {
            a
        } else {
            a + (rem * (b / rem).ln()).sqrt()
        }
    }
}
