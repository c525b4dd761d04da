//! Bivariate normal distribution function N₂(x, y; ρ).
//!
//! Drezner–Wesolowsky quadrature over the correlation integral with the
//! double-precision refinements of Genz (Gauss–Legendre rules of 6, 12 and
//! 20 points, and an asymptotic expansion for |ρ| > 0.925).
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::normal::{norm_cdf, norm_pdf};
use crate::error::{domain, Result};

/// A correlation coefficient in [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_nan() || rho.abs() > 1.0 {
            return Err(domain(format!("correlation {rho} outside [-1, 1]")));
        }
        Ok(Self(rho))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Correlation {
    type Error = crate::Error;
    fn try_from(rho: f64) -> Result<Self> {
        Self::new(rho)
    }
}

impl From<Correlation> for f64 {
    fn from(c: Correlation) -> f64 {
        c.0
    }
}

// (weight, node) on the negative half of [-1, 1]
const GL6: [(f64, f64); 3] = [
    (0.1713244923791705, -0.9324695142031522),
    (0.3607615730481384, -0.6612093864662647),
    (0.4679139345726904, -0.2386191860831970),
];

const GL12: [(f64, f64); 6] = [
    (0.04717533638651177, -0.9815606342467191),
    (0.1069393259953183, -0.9041172563704750),
    (0.1600783285433464, -0.7699026741943050),
    (0.2031674267230659, -0.5873179542866171),
    (0.2334925365383547, -0.3678314989981802),
    (0.2491470458134029, -0.1252334085114692),
];

const GL20: [(f64, f64); 10] = [
    (0.01761400713915212, -0.9931285991850949),
    (0.04060142980038694, -0.9639719272779138),
    (0.06267204833410906, -0.9122344282513259),
    (0.08327674157670475, -0.8391169718222188),
    (0.1019301198172404, -0.7463319064601508),
    (0.1181945319615184, -0.6360536807265150),
    (0.1316886384491766, -0.5108670019508271),
    (0.1420961093183821, -0.3737060887154196),
    (0.1491729864726037, -0.2277858511416451),
    (0.1527533871307259, -0.07652652113349733),
];

const TWO_PI: f64 = 2.0 * PI;

/// N₂(x, y; ρ) = P(X ≤ x, Y ≤ y) for standard normals with correlation ρ.
///
/// The |ρ| = 1 limits are N(min(x, y)) and max(0, N(x) − N(−y)).
pub fn bivariate_norm_cdf(x: f64, y: f64, rho: Correlation) -> f64 {
    let r = rho.value();
    if x.is_nan() || y.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return norm_cdf(y);
    }
    if y == f64::INFINITY {
        return norm_cdf(x);
    }
    if r == 1.0 {
        return norm_cdf(x.min(y));
    }
    if r == -1.0 {
        return (norm_cdf(x) - norm_cdf(-y)).max(0.0);
    }
    upper_orthant(-x, -y, r).clamp(0.0, 1.0)
}

/// Bivariate normal density φ₂(x, y; ρ) for |ρ| < 1, which equals ∂N₂/∂ρ.
pub fn bivariate_norm_pdf(x: f64, y: f64, rho: Correlation) -> f64 {
    let r = rho.value();
    let s = ((1.0 - r) * (1.0 + r)).sqrt();
    if s == 0.0 {
        return 0.0;
    }
    norm_pdf(x) * norm_pdf((y - r * x) / s) / s
}

/// P(X > dh, Y > dk), Genz's BVND.
fn upper_orthant(dh: f64, dk: f64, r: f64) -> f64 {
    let rule: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        if r != 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = r.asin();
            for &(w, node) in rule {
                for sgn in [-1.0, 1.0] {
                    let sn = (0.5 * asr * (sgn * node + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * TWO_PI);
        }
        return bvn + norm_cdf(-h) * norm_cdf(-k);
    }

    // |r| >= 0.925: reflect to positive correlation by negating k only
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (b_s / a_s + hk);
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        }
        if hk > -100.0 {
            let b = b_s.sqrt();
            bvn -= (-0.5 * hk).exp()
                * TWO_PI.sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
        }
        a *= 0.5;
        for &(w, node) in rule {
            for sgn in [-1.0, 1.0] {
                let xs = (a * (sgn * node + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -0.5 * (b_s / xs + hk);
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += if h < 0.0 { norm_cdf(k) - norm_cdf(h) } else { norm_cdf(-h) - norm_cdf(-k) };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(r: f64) -> Correlation {
        Correlation::new(r).unwrap()
    }

    /// Independent route: N₂(x, y; ρ) = ∫_{-∞}^{x} φ(u) N((y − ρu)/√(1−ρ²)) du by
    /// composite Simpson on [-12, x].
    fn quadrature_oracle(x: f64, y: f64, r: f64) -> f64 {
        let s = (1.0 - r * r).sqrt();
        let lo = -12.0_f64;
        let hi = x.min(12.0);
        if hi <= lo {
            return 0.0;
        }
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let f = |u: f64| norm_pdf(u) * norm_cdf((y - r * u) / s);
        let mut sum = f(lo) + f(hi);
        for i in 1..n {
            let u = lo + i as f64 * h;
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(u);
        }
        sum * h / 3.0
    }

    #[test]
    fn independence() {
        let v = bivariate_norm_cdf(0.3, -0.7, rho(0.0));
        assert!((v - norm_cdf(0.3) * norm_cdf(-0.7)).abs() < 1e-16);
    }

    #[test]
    fn quadrant_orthant_formula() {
        let q = quadrature_oracle(0.0, 0.0, 0.5);
        assert!((q - 1.0 / 3.0).abs() < 1e-10);
        for r in [-0.99, -0.95, -0.9, -0.5, -0.2, 0.2, 0.5, 0.8, 0.93, 0.999] {
            let exact = 0.25 + f64::asin(r) / TWO_PI;
            let v = bivariate_norm_cdf(0.0, 0.0, rho(r));
            assert!((v - exact).abs() < 5e-15, "rho {r}: {v} vs {exact}");
        }
    }

    #[test]
    fn marginal_and_degenerate_limits() {
        assert_eq!(bivariate_norm_cdf(1.2, f64::INFINITY, rho(-0.8)), norm_cdf(1.2));
        assert_eq!(bivariate_norm_cdf(0.4, -0.3, rho(1.0)), norm_cdf(-0.3));
        assert_eq!(bivariate_norm_cdf(0.4, 0.3, rho(-1.0)), norm_cdf(0.4) - norm_cdf(-0.3));
        assert_eq!(bivariate_norm_cdf(-0.4, -0.3, rho(-1.0)), 0.0);
        // continuity into the degenerate limit
        let near = bivariate_norm_cdf(0.4, 0.3, rho(-1.0 + 1e-12));
        assert!((near - (norm_cdf(0.4) - norm_cdf(-0.3))).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_quadrature_oracle() {
        let cases = [
            (0.5, -0.3, 0.1),
            (-1.2, 0.7, 0.6),
            (1.5, 1.1, -0.8),
            (0.3, -2.0, -0.95),
            (-0.5, 0.2, 0.97),
            (2.0, -1.0, -0.999),
            (1.0, -0.9, -0.98),
        ];
        for (x, y, r) in cases {
            let v = bivariate_norm_cdf(x, y, rho(r));
            let q = quadrature_oracle(x, y, r);
            assert!((v - q).abs() < 1e-12, "({x},{y},{r}): {v} vs {q}");
        }
    }

    #[test]
    fn correlation_domain() {
        assert!(Correlation::new(1.0001).is_err());
        assert!(Correlation::new(f64::NAN).is_err());
        assert!(Correlation::new(-1.0).is_ok());
    }
}
