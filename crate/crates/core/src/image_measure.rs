//! Image measures: finite combinations of weighted Dirac derivatives and
//! truncated exponential densities, together with the closed-form Gaussian
//! pairings the crossing formulas need.
//!
//! An atom `(a, n, w)` stands for `w·δ_a⁽ⁿ⁾`, paired with a test function
//! through `∫φ dδ_a⁽ⁿ⁾ = (−1)ⁿ φ⁽ⁿ⁾(a)`. An exponential component
//! `(r, c, U, w)` stands for the density `w·r·e^{r(v−c)}` on `(c, U)`, where
//! `U` may be `+∞` as long as the pairings converge.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special_fns::{
    bivariate_norm_cdf, exp_times_norm_cdf, hermite_eval, norm_cdf, norm_pdf, norm_pdf_deriv, Correlation,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub order: u32,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: f64, order: u32, weight: f64) -> Self {
        Self { location, order, weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpComponent {
    pub rate: f64,
    pub lower: f64,
    /// `None` is an improper upper limit at +∞.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub weight: f64,
}

impl ExpComponent {
    fn upper_or_inf(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRecord", into = "MeasureRecord")]
pub struct ImageMeasure {
    atoms: Vec<Atom>,
    exp_components: Vec<ExpComponent>,
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRecord {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    exp_components: Vec<ExpComponent>,
    horizon: f64,
}

impl TryFrom<MeasureRecord> for ImageMeasure {
    type Error = Error;
    fn try_from(r: MeasureRecord) -> Result<Self> {
        ImageMeasure::new(r.atoms, r.exp_components, r.horizon)
    }
}

impl From<ImageMeasure> for MeasureRecord {
    fn from(m: ImageMeasure) -> Self {
        MeasureRecord { atoms: m.atoms, exp_components: m.exp_components, horizon: m.horizon }
    }
}

impl ImageMeasure {
    pub fn new(atoms: Vec<Atom>, exp_components: Vec<ExpComponent>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(domain(format!("horizon must be positive, got {horizon}")));
        }
        if atoms.is_empty() && exp_components.is_empty() {
            return Err(domain("image measure needs at least one component"));
        }
        for a in &atoms {
            if !a.location.is_finite() || !a.weight.is_finite() {
                return Err(domain(format!("non-finite atom {a:?}")));
            }
        }
        for e in &exp_components {
            let upper_ok = e.upper.is_none_or(|u| u.is_finite() && u > e.lower);
            if !e.rate.is_finite() || !e.lower.is_finite() || !e.weight.is_finite() || !upper_ok {
                return Err(domain(format!("malformed exponential component {e:?}")));
            }
        }
        Ok(Self { atoms, exp_components, horizon })
    }

    /// A single weighted Dirac derivative `w·δ_a⁽ⁿ⁾`.
    pub fn atom(location: f64, order: u32, weight: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![Atom::new(location, order, weight)], Vec::new(), horizon)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn exp_components(&self) -> &[ExpComponent] {
        &self.exp_components
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.atoms.clone(), self.exp_components.clone(), horizon)
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        let a = self.atoms.iter().map(|a| a.location);
        let e = self.exp_components.iter().map(|e| e.lower);
        a.chain(e).fold(f64::INFINITY, f64::min)
    }

    /// μ₁ ⊕ μ₂. Both must share the horizon.
    pub fn combine(&self, other: &ImageMeasure) -> Result<Self> {
        if self.horizon != other.horizon {
            return Err(domain("cannot combine measures with different horizons"));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let mut exps = self.exp_components.clone();
        exps.extend_from_slice(&other.exp_components);
        Self::new(atoms, exps, self.horizon)
    }

    /// The push-forward under v ↦ v + delta.
    pub fn translated(&self, delta: f64) -> Self {
        let atoms = self.atoms.iter().map(|a| Atom::new(a.location + delta, a.order, a.weight)).collect();
        let exps = self
            .exp_components
            .iter()
            .map(|e| ExpComponent { lower: e.lower + delta, upper: e.upper.map(|u| u + delta), ..*e })
            .collect();
        Self { atoms, exp_components: exps, horizon: self.horizon }
    }

    /// U(u, t; μ) = ∫ N((u − v)/√(T − t)) dμ(v), and 0 once t ≥ T.
    pub fn u_eval(&self, u: f64, t: f64) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        self.smoothed(u, self.horizon - t)
    }

    /// U(u, t; μ′), the pairing against the distributional derivative.
    pub fn u_eval_derivative(&self, u: f64, t: f64) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        self.smoothed_derivative(u, self.horizon - t)
    }

    /// ∫ N((u − v)/√var) dμ(v) for an explicit variance.
    pub fn smoothed(&self, u: f64, var: f64) -> f64 {
        let s = var.sqrt();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * s.powi(-(a.order as i32)) * norm_pdf_deriv(a.order, (u - a.location) / s))
            .sum();
        let exps: f64 = self.exp_components.iter().map(|e| exp_smoothed(e, u, s)).sum();
        atoms + exps
    }

    /// ∂/∂u of [`smoothed`](Self::smoothed), i.e. the pairing with μ′.
    pub fn smoothed_derivative(&self, u: f64, var: f64) -> f64 {
        let s = var.sqrt();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * s.powi(-(a.order as i32 + 1)) * norm_pdf_deriv(a.order + 1, (u - a.location) / s))
            .sum();
        let exps: f64 = self.exp_components.iter().map(|e| exp_smoothed_derivative(e, u, s)).sum();
        atoms + exps
    }

    /// ∫ N₂(x, −v/√T; −√(t/T)) dμ(v), the correction term of the σ
    /// distribution function. Requires 0 < t < T.
    pub fn last_exit_pairing(&self, x: f64, t: f64) -> f64 {
        let big_t = self.horizon;
        let rho = -(t / big_t).sqrt();
        let sqrt_t = big_t.sqrt();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * sqrt_t.powi(-(a.order as i32)) * dy_bivariate(a.order, x, -a.location / sqrt_t, rho))
            .sum();
        let exps: f64 = self.exp_components.iter().map(|e| exp_last_exit_pairing(e, x, rho, big_t)).sum();
        atoms + exps
    }

    /// ∫ exp((2 f v − v²)/(2t)) dμ(v), which must equal one along an
    /// images-type boundary f.
    pub fn images_pairing(&self, f: f64, t: f64) -> f64 {
        let st = t.sqrt();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let z = (a.location - f) / st;
                let expo = (2.0 * f * a.location - a.location * a.location) / (2.0 * t);
                a.weight * st.powi(-(a.order as i32)) * hermite_eval(a.order, z) * expo.exp()
            })
            .sum();
        let exps: f64 = self
            .exp_components
            .iter()
            .map(|e| {
                if e.rate == 0.0 {
                    return 0.0;
                }
                let m = f + e.rate * t;
                let lead = m * m / (2.0 * t) - e.rate * e.lower;
                let hi = exp_times_norm_cdf(lead, (e.upper_or_inf() - m) / st);
                let lo = exp_times_norm_cdf(lead, (e.lower - m) / st);
                e.weight * e.rate * (2.0 * std::f64::consts::PI * t).sqrt() * (hi - lo)
            })
            .sum();
        atoms + exps
    }

    /// ∫ v N′((f − v)/√T) dμ(v), the integral in the first-hitting density
    /// of an images-type boundary at time T.
    pub fn images_density_pairing(&self, f: f64, big_t: f64) -> f64 {
        let st = big_t.sqrt();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let n = a.order;
                let z = (a.location - f) / st;
                let phi = norm_pdf(z);
                let mut v = a.location * st.powi(-(n as i32)) * hermite_eval(n, z) * phi;
                if n >= 1 {
                    v -= n as f64 * st.powi(-(n as i32 - 1)) * hermite_eval(n - 1, z) * phi;
                }
                a.weight * v
            })
            .sum();
        let exps: f64 = self
            .exp_components
            .iter()
            .map(|e| {
                if e.rate == 0.0 {
                    return 0.0;
                }
                let m = f + e.rate * big_t;
                let lead = (m * m - f * f) / (2.0 * big_t) - e.rate * e.lower;
                let alpha = (e.lower - m) / st;
                let beta = (e.upper_or_inf() - m) / st;
                let body = m * (norm_cdf(beta) - norm_cdf(alpha)) - st * (norm_pdf(beta) - norm_pdf(alpha));
                e.weight * e.rate * lead.exp() * st * body
            })
            .sum();
        atoms + exps
    }
}

/// ∫_c^U N((u − v)/s) w r e^{r(v−c)} dv, by parts.
fn exp_smoothed(e: &ExpComponent, u: f64, s: f64) -> f64 {
    if e.rate == 0.0 {
        return 0.0;
    }
    let r = e.rate;
    let c = e.lower;
    let upper = e.upper_or_inf();
    let boundary_hi = if upper.is_finite() { exp_times_norm_cdf(r * (upper - c), (u - upper) / s) } else { 0.0 };
    let boundary_lo = norm_cdf((u - c) / s);
    e.weight * (boundary_hi - boundary_lo + exp_bridge(r, c, upper, u, s))
}

/// e^{r(u−c)+r²s²/2} [N((U−u)/s − rs) − N((c−u)/s − rs)]
fn exp_bridge(r: f64, c: f64, upper: f64, u: f64, s: f64) -> f64 {
    let lead = r * (u - c) + 0.5 * r * r * s * s;
    // N(β) − N(α) = N(−α) − N(−β), the second form keeps the tail accurate
    let alpha = (c - u) / s - r * s;
    let beta = (upper - u) / s - r * s;
    if upper.is_infinite() {
        exp_times_norm_cdf(lead, -alpha)
    } else {
        exp_times_norm_cdf(lead, -alpha) - exp_times_norm_cdf(lead, -beta)
    }
}

fn exp_smoothed_derivative(e: &ExpComponent, u: f64, s: f64) -> f64 {
    if e.rate == 0.0 {
        return 0.0;
    }
    e.weight * e.rate * exp_bridge(e.rate, e.lower, e.upper_or_inf(), u, s)
}

/// ∂ⁿ/∂yⁿ N₂(x, y; ρ) for |ρ| < 1, via ∂N₂/∂y = N′(y) N((x − ρy)/√(1−ρ²)) and
/// the Leibniz rule for the remaining n − 1 derivatives.
fn dy_bivariate(n: u32, x: f64, y: f64, rho: f64) -> f64 {
    if n == 0 {
        return bivariate_norm_cdf(x, y, Correlation::new(rho).expect("|rho| <= 1"));
    }
    let sr = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let h = (x - rho * y) / sr;
    let dh = -rho / sr;
    let m = n - 1;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        // N′⁽ᵐ⁻ʲ⁾(y) · (h′)ʲ N⁽ʲ⁾(h)
        sum += binom * norm_pdf_deriv(m - j + 1, y) * dh.powi(j as i32) * norm_pdf_deriv(j, h);
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    sum
}

/// ∫_c^U N₂(x, −v/√T; ρ) w r e^{r(v−c)} dv.
///
/// By parts the integral reduces to boundary terms plus
/// ∫ e^{r(v−c)} N′(v/√T) N(α + βv) dv, a Gaussian integral of a normal
/// distribution function, which is itself a bivariate normal probability.
fn exp_last_exit_pairing(e: &ExpComponent, x: f64, rho: f64, big_t: f64) -> f64 {
    if e.rate == 0.0 {
        return 0.0;
    }
    let r = e.rate;
    let c = e.lower;
    let upper = e.upper_or_inf();
    let st = big_t.sqrt();
    let corr = Correlation::new(rho).expect("|rho| <= 1");
    let boundary_hi =
        if upper.is_finite() { bivariate_norm_cdf(x, -upper / st, corr) * (r * (upper - c)).exp() } else { 0.0 };
    let boundary_lo = bivariate_norm_cdf(x, -c / st, corr);

    let sr = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let alpha = x / sr;
    let beta = rho / (sr * st);
    let a_shift = alpha + beta * r * big_t;
    let b_scale = beta * st;
    let norm = (1.0 + b_scale * b_scale).sqrt();
    let tail = |z0: f64| -> f64 {
        // ∫_{z0}^{∞} N′(z) N(A + Bz) dz
        if z0 == f64::INFINITY {
            return 0.0;
        }
        bivariate_norm_cdf(a_shift / norm, -z0, Correlation::new((b_scale / norm).clamp(-1.0, 1.0)).expect("clamped"))
    };
    let z_lo = (c - r * big_t) / st;
    let z_hi = (upper - r * big_t) / st;
    let lead = 0.5 * r * r * big_t - r * c;
    let interior = tail(z_lo) - tail(z_hi);
    let interior = if interior == 0.0 { 0.0 } else { lead.exp() * interior };
    e.weight * (boundary_hi - boundary_lo + interior)
}

/// Outcome of checking U(g(t), t; μ) = 1 along a barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    /// max over the grid of |U(g(t), t; μ) − 1|
    pub max_abs_deviation: f64,
    pub worst_time: f64,
    /// max of |U(w, t; μ)| over sampled w ≤ g(t) on the whole grid
    pub empirical_bound: f64,
    /// the same maximum restricted to grid times with T − t ≥ T/100
    pub bound_away_from_horizon: f64,
    /// false when the sampled bound keeps growing toward the horizon
    pub bounded: bool,
}

/// Growth of the sampled bound toward the horizon tolerated before the
/// boundedness hypothesis is declared violated.
pub const BOUND_GROWTH_LIMIT: f64 = 4.0;

/// Checks the barrier identity U(g(t), t; μ) = 1 on `grid` and samples
/// |U(w, t; μ)| for w ≤ g(t).
pub fn verify_barrier_identity<G>(m: &ImageMeasure, g: G, grid: &[f64]) -> Result<IdentityReport>
where
    G: Fn(f64) -> f64,
{
    let big_t = m.horizon();
    if grid.is_empty() {
        return Err(domain("empty verification grid"));
    }
    if let Some(bad) = grid.iter().find(|&&t| !(0.0..big_t).contains(&t)) {
        return Err(domain(format!("grid time {bad} outside [0, {big_t})")));
    }
    let mut max_dev = 0.0f64;
    let mut worst_time = grid[0];
    let mut bound_all = 0.0f64;
    let mut bound_far = 0.0f64;
    let far_cut = big_t - 0.01 * big_t;
    let locations: Vec<f64> =
        m.atoms().iter().map(|a| a.location).chain(m.exp_components().iter().map(|e| e.lower)).collect();
    let offsets = [0.0, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0];
    for &t in grid {
        let gt = g(t);
        let dev = (m.u_eval(gt, t) - 1.0).abs();
        if dev > max_dev || dev.is_nan() {
            max_dev = if dev.is_nan() { f64::INFINITY } else { dev };
            worst_time = t;
        }
        let s = (big_t - t).sqrt();
        let samples = offsets
            .iter()
            .map(|k| gt - k * s)
            .chain((1..=5).map(|k| gt - k as f64 * big_t.sqrt()))
            .chain(locations.iter().map(|&loc| loc.min(gt)));
        let local = samples.map(|w| m.u_eval(w, t).abs()).fold(0.0, f64::max);
        bound_all = bound_all.max(local);
        if t <= far_cut {
            bound_far = bound_far.max(local);
        }
    }
    if grid.iter().all(|&t| t > far_cut) {
        bound_far = bound_all;
    }
    Ok(IdentityReport {
        max_abs_deviation: max_dev,
        worst_time,
        empirical_bound: bound_all,
        bound_away_from_horizon: bound_far,
        bounded: bound_all <= BOUND_GROWTH_LIMIT * bound_far.max(1.0),
    })
}

/// `n` times from 0 to T(1 − 10⁻⁶), spaced geometrically in T − t so the
/// approach to the horizon is resolved.
pub fn identity_grid(horizon: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|k| {
            let frac = k as f64 / (n - 1) as f64;
            horizon * (1.0 - 1e-6f64.powf(frac))
        })
        .collect()
}
