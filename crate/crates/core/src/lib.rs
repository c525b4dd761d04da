//! Exact boundary-crossing probabilities, one-sided last-exit distributions
//! and first-hitting densities for standard Brownian motion against a set of
//! explicit and semi-explicit moving barriers.
//!
//! Every closed form is paired with an image measure whose Gaussian smoothing
//! equals one along the barrier, so the formulas can be checked structurally
//! ([`image_measure::verify_barrier_identity`]) and statistically
//! ([`montecarlo`]).

pub mod analytics;
pub mod barriers;
pub mod cli;
mod error;
pub mod image_measure;
pub mod montecarlo;
pub(crate) mod roots;
pub mod special_fns;
pub mod verify;

pub use analytics::{CrossingResult, DensityCurve, DensityKind};
pub use barriers::{BarrierSpec, BarrierValue, Family};
pub use error::{Error, Result};
pub use image_measure::{Atom, ExpComponent, ImageMeasure};
pub use montecarlo::{McConfig, McEstimate};
