//! Last-exit times σ and λ of one-sided barriers and the first-hitting time
//! of their time inversions.

use crate::barriers::{BarrierSpec, Family};
use crate::error::{domain, Result};
use crate::special_fns::{hermite_eval, norm_cdf, norm_pdf};

fn require_one_sided(spec: &BarrierSpec) -> Result<()> {
    if spec.is_one_sided_on_horizon() {
        Ok(())
    } else {
        Err(domain(format!("last-exit distributions need a one-sided barrier on [0, T], got {}", spec.family().name())))
    }
}

fn open_interval(t: f64, big_t: f64) -> Result<()> {
    if t > 0.0 && t < big_t {
        Ok(())
    } else {
        Err(domain(format!("density needs 0 < t < T (t = {t}, T = {big_t})")))
    }
}

/// P(σ ≤ t), σ = sup{s ∈ (0, T] : W_s ≥ g(s)}, for 0 < t ≤ T. Holds for
/// every parameter value the family admits.
pub fn sigma_cdf(spec: &BarrierSpec, t: f64) -> Result<f64> {
    require_one_sided(spec)?;
    let big_t = spec.horizon();
    if !(t > 0.0 && t <= big_t) {
        return Err(domain(format!("sigma_cdf needs 0 < t <= T (t = {t})")));
    }
    let x = spec.upper(t)? / t.sqrt();
    if t == big_t {
        return Ok(norm_cdf(x));
    }
    let m = spec.measure()?;
    Ok((norm_cdf(x) - m.last_exit_pairing(x, t)).clamp(0.0, 1.0))
}

/// Closed form of P(σ ≤ t) for the log-remaining barrier.
pub fn log_remaining_sigma_cdf(a: f64, b: f64, big_t: f64, t: f64) -> f64 {
    let rem = big_t - t;
    let g = a - (rem * (b / rem).ln()).sqrt();
    norm_cdf(g / t.sqrt())
        - (b / big_t).sqrt()
            * (-a * a / (2.0 * big_t)).exp()
            * norm_cdf((g - a * t / big_t) / (t * (1.0 - t / big_t)).sqrt())
}

/// d/dt P(σ ≤ t) for 0 < t < T, from the per-family closed forms.
pub fn sigma_pdf(spec: &BarrierSpec, t: f64) -> Result<f64> {
    require_one_sided(spec)?;
    let big_t = spec.horizon();
    open_interval(t, big_t)?;
    let rem = big_t - t;
    let s = rem.sqrt();
    let g = spec.upper(t)?;
    let kernel = norm_pdf(g / t.sqrt());
    let v = match *spec.family() {
        Family::Linear { b, .. } => (norm_pdf(b * s) / s + b * norm_cdf(b * s)) * kernel / t.sqrt(),
        Family::SqrtRemaining { b, .. } => norm_pdf(b) / (2.0 * norm_cdf(b) * (t * rem).sqrt()) * kernel,
        Family::LogRemaining { b, .. } => 0.5 * ((b / rem).ln() / (t * rem)).sqrt() * kernel,
        Family::Hermite { n, .. } => {
            let x = spec.hermite_x(t)?;
            hermite_eval(n, x) / (2.0 * hermite_eval(n - 1, x) * (t * rem).sqrt()) * kernel
        }
        _ => unreachable!("checked one-sided"),
    };
    Ok(v)
}

/// d/dt P(σ ≤ t) through the measure: (1/(2√t)) N′(g(t)/√t) U(g(t), t; μ′).
pub fn sigma_pdf_general(spec: &BarrierSpec, t: f64) -> Result<f64> {
    require_one_sided(spec)?;
    open_interval(t, spec.horizon())?;
    let g = spec.upper(t)?;
    let m = spec.measure()?;
    Ok(norm_pdf(g / t.sqrt()) * m.u_eval_derivative(g, t) / (2.0 * t.sqrt()))
}

/// The barrier reflected through 0, whose σ gives the lower half of λ.
fn reflected(spec: &BarrierSpec) -> Result<BarrierSpec> {
    let big_t = spec.horizon();
    match *spec.family() {
        Family::Linear { a, b } => BarrierSpec::linear(-a, -b, big_t),
        Family::SqrtRemaining { a, b } => BarrierSpec::sqrt_remaining(-a, -b, big_t),
        _ => Err(domain(format!(
            "lambda distributions are available for linear and sqrt-remaining barriers, not {}",
            spec.family().name()
        ))),
    }
}

/// P(λ ≤ t), λ = sup{s ∈ (0, T] : W_s = g(s)}, for 0 < t ≤ T. Paths that
/// never touch the barrier count as λ ≤ t.
pub fn lambda_cdf(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let mirror = reflected(spec)?;
    let big_t = spec.horizon();
    if !(t > 0.0 && t <= big_t) {
        return Err(domain(format!("lambda_cdf needs 0 < t <= T (t = {t})")));
    }
    if t == big_t {
        return Ok(1.0);
    }
    let x = spec.upper(t)? / t.sqrt();
    let above = spec.measure()?.last_exit_pairing(x, t);
    let below = mirror.measure()?.last_exit_pairing(-x, t);
    Ok((1.0 - above - below).clamp(0.0, 1.0))
}

/// d/dt P(λ ≤ t) from the closed forms for linear and sqrt-remaining
/// barriers.
pub fn lambda_pdf(spec: &BarrierSpec, t: f64) -> Result<f64> {
    reflected(spec)?;
    let big_t = spec.horizon();
    open_interval(t, big_t)?;
    let rem = big_t - t;
    let s = rem.sqrt();
    let kernel = norm_pdf(spec.upper(t)? / t.sqrt());
    let v = match *spec.family() {
        Family::Linear { b, .. } => {
            (2.0 * norm_pdf(b * s) / s + b * (norm_cdf(b * s) - norm_cdf(-b * s))) * kernel / t.sqrt()
        }
        Family::SqrtRemaining { b, .. } => norm_pdf(b) / (2.0 * norm_cdf(b) * norm_cdf(-b)) / (t * rem).sqrt() * kernel,
        _ => unreachable!("checked by reflected"),
    };
    Ok(v)
}

/// d/dt P(λ ≤ t) as the sum of the σ-densities of the barrier and of its
/// reflection.
pub fn lambda_pdf_general(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let mirror = reflected(spec)?;
    Ok(sigma_pdf_general(spec, t)? + sigma_pdf_general(&mirror, t)?)
}

fn inverted_base(spec: &BarrierSpec) -> Result<&BarrierSpec> {
    match spec.family() {
        Family::TimeInverted { base } => Ok(base),
        f => Err(domain(format!("needs a time-inverted barrier, got {}", f.name()))),
    }
}

/// Density of σ̂ = inf{t ≥ T : W_t ≥ ĝ(t)} at t > T, equal to
/// (T²/t²) times the σ-density of the base barrier at T²/t.
pub fn hitting_pdf_inverted(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let base = inverted_base(spec)?;
    let big_t = spec.horizon();
    if !(t > big_t && t.is_finite()) {
        return Err(domain(format!("inverted hitting density needs t > T (t = {t})")));
    }
    let s = big_t * big_t / t;
    Ok(big_t * big_t / (t * t) * sigma_pdf(base, s.min(big_t))?)
}

/// P(σ̂ ≤ t) = 1 − P(σ ≤ T²/t) for t ≥ T.
pub fn hitting_cdf_inverted(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let base = inverted_base(spec)?;
    let big_t = spec.horizon();
    if !(t >= big_t && t.is_finite()) {
        return Err(domain(format!("inverted hitting distribution needs T <= t < inf (t = {t})")));
    }
    let s = if t == big_t { big_t } else { (big_t * big_t / t).min(big_t) };
    Ok(1.0 - sigma_cdf(base, s)?)
}

/// Closed form of the inverted sqrt-remaining hitting density:
/// N′(b) / (2 N(b) t √(t/T − 1)) · N′(ĝ(t)/√t).
pub fn inverted_sqrt_hitting_pdf(a: f64, b: f64, big_t: f64, t: f64) -> f64 {
    let g_hat = a * t / big_t + b * (t * t / big_t - t).sqrt();
    norm_pdf(b) / (2.0 * norm_cdf(b) * t * (t / big_t - 1.0).sqrt()) * norm_pdf(g_hat / t.sqrt())
}
