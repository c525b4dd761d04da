//! Probabilists' Hermite polynomials: dⁿ/dxⁿ e^(−x²/2) = (−1)ⁿ Hₙ(x) e^(−x²/2).

use crate::roots::newton_bracketed;

/// Hermite polynomial of a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitePoly {
    pub order: u32,
}

impl HermitePoly {
    pub fn new(order: u32) -> Self {
        Self { order }
    }

    pub fn eval(self, x: f64) -> f64 {
        hermite_eval(self.order, x)
    }

    /// Hₙ′(x) = n Hₙ₋₁(x).
    pub fn derivative(self, x: f64) -> f64 {
        if self.order == 0 {
            0.0
        } else {
            self.order as f64 * hermite_eval(self.order - 1, x)
        }
    }

    /// Largest zero; `None` for the constant polynomial.
    pub fn largest_zero(self) -> Option<f64> {
        (self.order >= 1).then(|| hermite_largest_zero(self.order))
    }
}

/// Hₙ(x) by the three-term form of Hₙ₊₁ = x Hₙ − Hₙ′.
pub fn hermite_eval(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    match n {
        0 => return 1.0,
        1 => return x,
        _ => {}
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Largest zero zₙ of Hₙ, for `n >= 1`.
///
/// By interlacing, zₙ is the only zero of Hₙ above zₙ₋₁, and every zero lies
/// below √(4n + 2); each level is solved on that bracket.
pub fn hermite_largest_zero(n: u32) -> f64 {
    assert!(n >= 1, "H_0 has no zeros");
    let mut z = 0.0;
    for m in 2..=n {
        let lo = z;
        let hi = (4.0 * m as f64 + 2.0).sqrt();
        let f = |x: f64| (hermite_eval(m, x), m as f64 * hermite_eval(m - 1, x));
        z = newton_bracketed(f, lo, hi).expect("Hermite zero bracket always changes sign");
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        assert_eq!(hermite_eval(0, 3.7), 1.0);
        assert_eq!(hermite_eval(2, 2.0), 3.0);
        assert_eq!(hermite_eval(3, 1.0), -2.0);
        // H₃(x) = x³ − 3x
        for x in [-1.5, 0.2, 2.5] {
            assert!((hermite_eval(3, x) - (x * x * x - 3.0 * x)).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_recurrence() {
        // Hₙ₊₁(x) = x Hₙ(x) − Hₙ′(x), with Hₙ′ by central differences
        for n in 0..8 {
            for x in [-2.0, -0.3, 0.7, 1.9] {
                let h = 1e-5;
                let d = (hermite_eval(n, x + h) - hermite_eval(n, x - h)) / (2.0 * h);
                let lhs = hermite_eval(n + 1, x);
                let rhs = x * hermite_eval(n, x) - d;
                assert!((lhs - rhs).abs() < 1e-6 * (1.0 + lhs.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn largest_zero_values() {
        assert_eq!(hermite_largest_zero(1), 0.0);
        assert!((hermite_largest_zero(2) - 1.0).abs() < 1e-15);
        assert!((hermite_largest_zero(3) - 3f64.sqrt()).abs() < 1e-14);
        for n in 1..=12 {
            let z = hermite_largest_zero(n);
            assert!(hermite_eval(n, z).abs() < 1e-10 * (1.0 + hermite_eval(n, z + 1.0).abs()));
            // positive beyond the last zero
            for k in 1..20 {
                assert!(hermite_eval(n, z + 0.25 * k as f64) > 0.0);
            }
        }
    }

    #[test]
    fn zeros_interlace() {
        for n in 2..=10 {
            assert!(hermite_largest_zero(n - 1) < hermite_largest_zero(n));
        }
    }

    #[test]
    fn zeros_symmetric() {
        // Hₙ(−x) = (−1)ⁿ Hₙ(x), so −zₙ is also a zero
        for n in 1..=9 {
            let z = hermite_largest_zero(n);
            assert!(hermite_eval(n, -z).abs() < 1e-9 * (1.0 + z.powi(n as i32)));
        }
    }
}
