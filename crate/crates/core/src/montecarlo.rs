//! Simulation oracle: discretised Brownian paths checked against a barrier,
//! with an optional Brownian-bridge correction between grid points.
//!
//! Path `i` always draws from its own generator seeded by `(seed, i)`, and
//! paths are processed in fixed chunks whose results are combined in index
//! order, so every estimate is bit-identical whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{BarrierSpec, BarrierValue, Family};
use crate::error::{domain, Result};
use crate::special_fns::norm_pdf;

/// Environment variable read for the worker count when no pool is installed.
pub const THREADS_ENV: &str = "BMCROSS_THREADS";

/// Inverted barriers are simulated on [T, INVERTED_SPAN·T].
pub const INVERTED_SPAN: f64 = 100.0;

const CHUNK: u64 = 4096;

// e^{-37} < 1e-16: below this the bridge cannot fire in a double-precision draw
const BRIDGE_CUTOFF: f64 = 37.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    pub steps: usize,
    pub seed: u64,
    pub bridge_correction: bool,
    pub start: f64,
}

impl McConfig {
    /// Bridge correction on, start at 0.
    pub fn new(paths: u64, steps: usize, seed: u64) -> Result<Self> {
        let cfg = Self { paths, steps, seed, bridge_correction: true, start: 0.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_bridge(mut self, on: bool) -> Self {
        self.bridge_correction = on;
        self
    }

    pub fn with_start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 1 {
            return Err(domain("paths must be at least 1"));
        }
        if self.steps < 2 {
            return Err(domain(format!("steps must be at least 2, got {}", self.steps)));
        }
        if !self.start.is_finite() {
            return Err(domain(format!("start must be finite, got {}", self.start)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub paths_used: u64,
    pub config: McConfig,
}

impl McEstimate {
    fn from_moments(mean: f64, var: f64, config: McConfig) -> Self {
        let std_error = (var.max(0.0) / config.paths as f64).sqrt();
        let half = 1.959963984540054 * std_error;
        Self { estimate: mean, std_error, ci95: (mean - half, mean + half), paths_used: config.paths, config }
    }

    fn binomial(hits: u64, config: McConfig) -> Self {
        let p = hits as f64 / config.paths as f64;
        Self::from_moments(p, p * (1.0 - p), config)
    }

    /// (analytic − estimate)/SE; ±∞ when the SE is zero and they differ.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let d = analytic - self.estimate;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    /// |analytic − estimate| < max(k·SE, floor), or exact equality (a zero
    /// SE with a zero floor).
    pub fn agrees_with(&self, analytic: f64, k: f64, floor: f64) -> bool {
        let d = (analytic - self.estimate).abs();
        d < (k * self.std_error).max(floor) || d == 0.0
    }
}

/// Empirical CDFs of the σ- and λ-proxies on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LastExitEstimate {
    pub grid: Vec<f64>,
    pub sigma: Vec<McEstimate>,
    pub lambda: Vec<McEstimate>,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Count, compensated sum and centred second moment (Welford within a
/// chunk, Chan's update across chunks).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: Compensated,
    m2: f64,
}

impl Moments {
    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum.value() / self.n as f64
        }
    }

    fn push(&mut self, y: f64) {
        let before = self.mean();
        self.n += 1;
        self.sum.add(y);
        self.m2 += (y - before) * (y - self.mean());
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let d = other.mean() - self.mean();
        let n = self.n + other.n;
        let mut sum = self.sum;
        sum.add(other.sum.sum);
        sum.add(other.sum.carry);
        Moments { n, sum, m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64) }
    }
}

/// Barrier values on the simulation grid.
struct Track {
    times: Vec<f64>,
    upper: Vec<f64>,
    lower: Option<Vec<f64>>,
    sqrt_dt: Vec<f64>,
    two_over_dt: Vec<f64>,
    /// variance of the first node (T for the inverted family, else 0)
    initial_var: f64,
}

impl Track {
    fn build(spec: &BarrierSpec, steps: usize) -> Result<Self> {
        let big_t = spec.horizon();
        let n = steps as f64;
        let (times, initial_var): (Vec<f64>, f64) = match spec.family() {
            Family::TimeInverted { .. } => {
                let mut ts: Vec<f64> = (0..=steps).map(|k| big_t * INVERTED_SPAN.powf(k as f64 / n)).collect();
                ts[0] = big_t;
                (ts, big_t)
            }
            _ => {
                let mut ts: Vec<f64> = (0..=steps).map(|k| big_t * k as f64 / n).collect();
                ts[steps] = big_t;
                (ts, 0.0)
            }
        };
        let mut upper = Vec::with_capacity(steps + 1);
        let mut lower = Vec::with_capacity(if spec.is_two_sided() { steps + 1 } else { 0 });
        for &t in &times {
            match spec.eval(t)? {
                BarrierValue::One(g) => upper.push(g),
                BarrierValue::Two { upper: g0, lower: g1 } => {
                    upper.push(g0);
                    lower.push(g1);
                }
            }
        }
        let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            sqrt_dt: dts.iter().map(|d| d.sqrt()).collect(),
            two_over_dt: dts.iter().map(|d| 2.0 / d).collect(),
            times,
            upper,
            lower: spec.is_two_sided().then_some(lower),
            initial_var,
        })
    }

    fn steps(&self) -> usize {
        self.sqrt_dt.len()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn path_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Probability that a Brownian bridge of variance rate 1 over an interval
/// with `two_over_dt` = 2/Δ touches a line it starts d₁ and ends d₂ from.
#[inline]
fn bridge_p(d1: f64, d2: f64, two_over_dt: f64) -> f64 {
    let e = d1 * d2 * two_over_dt;
    if e >= BRIDGE_CUTOFF {
        0.0
    } else {
        (-e).exp()
    }
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool of `threads` workers. Estimates do not depend on the
/// choice.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| domain(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Maps every chunk of path indices through `f`, in index order.
fn map_chunks<R, F>(paths: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, u64) -> R + Sync + Send,
{
    let chunks = paths.div_ceil(CHUNK);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let first = c * CHUNK;
                f(first, (first + CHUNK).min(paths))
            })
            .collect::<Vec<R>>()
    };
    match (rayon::current_thread_index(), threads_from_env()) {
        (None, Some(n)) => with_threads(n, run).unwrap_or_else(|_| run()),
        _ => run(),
    }
}

/// Where and how a path first met the barrier.
struct Hit {
    /// interval index (None: at the first node)
    step: Option<usize>,
    /// fraction of the interval, linearly interpolated
    frac: f64,
}

fn first_hit(track: &Track, cfg: &McConfig, rng: &mut Xoshiro256PlusPlus) -> Option<Hit> {
    let mut x = cfg.start;
    if track.initial_var > 0.0 {
        x += track.initial_var.sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    match track.lower.as_deref() {
        None => one_sided_hit(track, cfg.bridge_correction, x, rng),
        Some(lo) => two_sided_hit(track, lo, cfg.bridge_correction, x, rng),
    }
}

fn one_sided_hit(track: &Track, bridge: bool, mut x: f64, rng: &mut Xoshiro256PlusPlus) -> Option<Hit> {
    let up = &track.upper;
    let mut d1 = up[0] - x;
    if d1 <= 0.0 {
        return Some(Hit { step: None, frac: 0.0 });
    }
    let steps = track.steps();
    let nodes = track.sqrt_dt.iter().zip(&track.two_over_dt).zip(&up[1..=steps]);
    for (k, ((&sd, &w), &g)) in nodes.enumerate() {
        x += sd * rng.sample::<f64, _>(StandardNormal);
        let d2 = g - x;
        if d2 <= 0.0 {
            return Some(Hit { step: Some(k), frac: d1 / (d1 - d2) });
        }
        if bridge {
            let e = d1 * d2 * w;
            if e < BRIDGE_CUTOFF && rng.random::<f64>() < (-e).exp() {
                return Some(Hit { step: Some(k), frac: d1 / (d1 + d2) });
            }
        }
        d1 = d2;
    }
    None
}

fn two_sided_hit(track: &Track, lo: &[f64], bridge: bool, mut x: f64, rng: &mut Xoshiro256PlusPlus) -> Option<Hit> {
    let up = &track.upper;
    let (mut d1, mut e1) = (up[0] - x, x - lo[0]);
    if d1 <= 0.0 || e1 <= 0.0 {
        return Some(Hit { step: None, frac: 0.0 });
    }
    let steps = track.steps();
    let nodes = track.sqrt_dt.iter().zip(&track.two_over_dt).zip(up[1..=steps].iter().zip(&lo[1..=steps]));
    for (k, ((&sd, &w), (&g, &l))) in nodes.enumerate() {
        x += sd * rng.sample::<f64, _>(StandardNormal);
        let (d2, e2) = (g - x, x - l);
        if d2 <= 0.0 {
            return Some(Hit { step: Some(k), frac: d1 / (d1 - d2) });
        }
        if e2 <= 0.0 {
            return Some(Hit { step: Some(k), frac: e1 / (e1 - e2) });
        }
        if bridge {
            let pu = bridge_p(d1, d2, w);
            let pl = bridge_p(e1, e2, w);
            let p = 1.0 - (1.0 - pu) * (1.0 - pl);
            if p > 0.0 && rng.random::<f64>() < p {
                let frac = if pu >= pl { d1 / (d1 + d2) } else { e1 / (e1 + e2) };
                return Some(Hit { step: Some(k), frac });
            }
        }
        d1 = d2;
        e1 = e2;
    }
    None
}

/// Estimates P(τ(start) < T): the path start + W_t meets the barrier on its
/// time domain (the inverted family on [T, 100T]).
pub fn mc_crossing(spec: &BarrierSpec, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let track = Track::build(spec, cfg.steps)?;
    let hits: u64 = map_chunks(cfg.paths, |first, end| {
        (first..end).filter(|&i| first_hit(&track, cfg, &mut path_rng(cfg.seed, i)).is_some()).count() as u64
    })
    .into_iter()
    .sum();
    Ok(McEstimate::binomial(hits, *cfg))
}

fn require_one_sided(spec: &BarrierSpec) -> Result<()> {
    if spec.is_one_sided_on_horizon() {
        Ok(())
    } else {
        Err(domain(format!("needs a one-sided barrier on [0, T], got {}", spec.family().name())))
    }
}

/// Empirical CDFs of σ (last time at or above g) and λ (last time on g) at
/// the `grid` times in (0, T].
///
/// λ is proxied by the midpoint of the last interval in which the path met
/// the barrier (sign change, or bridge touch when the correction is on);
/// paths that never meet it count as λ ≤ t for every t. The σ-CDF is
/// counted as P(λ ≤ t, W_T < g(T)), so at t = T it is N(g(T)/√T): the
/// paths ending above the barrier (σ = T) are left out, as in the
/// closed forms.
pub fn mc_last_exit(spec: &BarrierSpec, cfg: &McConfig, grid: &[f64]) -> Result<LastExitEstimate> {
    cfg.validate()?;
    require_one_sided(spec)?;
    let big_t = spec.horizon();
    if let Some(&t) = grid.iter().find(|&&t| !(t > 0.0 && t <= big_t)) {
        return Err(domain(format!("grid time {t} outside (0, {big_t}]")));
    }
    let track = Track::build(spec, cfg.steps)?;
    let steps = track.steps();
    let up = &track.upper;
    let counts = map_chunks(cfg.paths, |first, end| {
        let mut sigma = vec![0u64; grid.len()];
        let mut lambda = vec![0u64; grid.len()];
        let mut xs = vec![0.0; steps + 1];
        for i in first..end {
            let mut rng = path_rng(cfg.seed, i);
            xs[0] = cfg.start;
            for k in 0..steps {
                xs[k + 1] = xs[k] + track.sqrt_dt[k] * rng.sample::<f64, _>(StandardNormal);
            }
            let mut lam = 0.0;
            for k in (0..steps).rev() {
                let (d1, d2) = (xs[k] - up[k], xs[k + 1] - up[k + 1]);
                let touched = if (d1 >= 0.0) != (d2 >= 0.0) {
                    true
                } else if cfg.bridge_correction {
                    let p = bridge_p(d1, d2, track.two_over_dt[k]);
                    p > 0.0 && rng.random::<f64>() < p
                } else {
                    false
                };
                if touched {
                    lam = 0.5 * (track.times[k] + track.times[k + 1]);
                    break;
                }
            }
            let ends_below = xs[steps] < up[steps];
            for (j, &t) in grid.iter().enumerate() {
                sigma[j] += u64::from(ends_below && lam <= t);
                lambda[j] += u64::from(lam <= t);
            }
        }
        (sigma, lambda)
    });
    let mut sigma = vec![0u64; grid.len()];
    let mut lambda = vec![0u64; grid.len()];
    for (s, l) in counts {
        for j in 0..grid.len() {
            sigma[j] += s[j];
            lambda[j] += l[j];
        }
    }
    Ok(LastExitEstimate {
        grid: grid.to_vec(),
        sigma: sigma.into_iter().map(|h| McEstimate::binomial(h, *cfg)).collect(),
        lambda: lambda.into_iter().map(|h| McEstimate::binomial(h, *cfg)).collect(),
    })
}

/// Both sides of Fortet's equation at (u, v):
/// (1/√T) N′((u − v)/√T) analytically, and
/// E[(T − τ)^{−1/2} N′((g(τ) − v)/√(T − τ)); τ < T] by simulation from u.
/// The crossing time and barrier value are interpolated linearly inside the
/// step where the crossing is detected.
pub fn mc_fortet_check(spec: &BarrierSpec, v: f64, u: f64, cfg: &McConfig) -> Result<(f64, McEstimate)> {
    require_one_sided(spec)?;
    let big_t = spec.horizon();
    let (g0, g_end) = (spec.upper(0.0)?, spec.upper(big_t)?);
    if !(v > g_end) {
        return Err(domain(format!("Fortet check needs v > g(T) (v = {v}, g(T) = {g_end})")));
    }
    if !(u <= g0) {
        return Err(domain(format!("Fortet check needs u <= g(0) (u = {u}, g(0) = {g0})")));
    }
    let cfg = cfg.with_start(u);
    cfg.validate()?;
    let track = Track::build(spec, cfg.steps)?;
    let lhs = norm_pdf((u - v) / big_t.sqrt()) / big_t.sqrt();
    let parts = map_chunks(cfg.paths, |first, end| {
        let mut acc = Moments::default();
        for i in first..end {
            let y = match first_hit(&track, &cfg, &mut path_rng(cfg.seed, i)) {
                None => 0.0,
                Some(hit) => {
                    let (tau, g) = match hit.step {
                        None => (0.0, track.upper[0]),
                        Some(k) => {
                            let (t0, t1) = (track.times[k], track.times[k + 1]);
                            let (g0, g1) = (track.upper[k], track.upper[k + 1]);
                            (t0 + hit.frac * (t1 - t0), g0 + hit.frac * (g1 - g0))
                        }
                    };
                    let rem = big_t - tau;
                    if rem > 0.0 {
                        norm_pdf((g - v) / rem.sqrt()) / rem.sqrt()
                    } else {
                        0.0
                    }
                }
            };
            acc.push(y);
        }
        acc
    });
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let mean = total.mean();
    let var = if total.n > 1 { total.m2 / (total.n - 1) as f64 } else { 0.0 };
    Ok((lhs, McEstimate::from_moments(mean, var, cfg)))
}
