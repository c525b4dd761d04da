//! Scalar special functions: the standard normal and its derivatives, the
//! bivariate normal distribution, probabilists' Hermite polynomials and the
//! two real branches of the Lambert W function.
//!
//! All functions are pure.

mod bivariate;
mod hermite;
mod lambert;
mod normal;

pub use bivariate::{bivariate_norm_cdf, bivariate_norm_pdf, Correlation};
pub use hermite::{hermite_eval, hermite_largest_zero, HermitePoly};
pub use lambert::{lambert_w, lambert_w_lower_from_log, Branch};
pub use normal::{exp_times_norm_cdf, log_norm_cdf, norm_cdf, norm_pdf, norm_pdf_deriv, FRAC_1_SQRT_2PI};
