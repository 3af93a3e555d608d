//! Bounded loss functions and the numerical machinery built around them:
//! Tukey's biweight family, radial reference laws (normal and Student),
//! adaptive Gauss-Kronrod expectations, consistency constants, and the
//! tuning solver that picks a cutoff for a requested breakdown fraction.
//!
//! The crate is deliberately scalar: everything here is a function of one
//! real variable, integrated or solved to high accuracy, so the estimation
//! crates can treat these quantities as exact.

pub mod biweight;
pub mod law;
pub mod quad;
pub mod solve;
pub mod tuning;

pub use biweight::Biweight;
pub use law::RadialLaw;
pub use quad::{integrate, QuadOpts, Quadrature};
pub use solve::{find_root_bracketed, golden_max, golden_min};
pub use tuning::{check_nesting, consistency_b0, tune_cutoff, TunedLoss};

use thiserror::Error;

/// Errors for scalar losses, laws, and the solvers on top of them.
#[derive(Debug, Error)]
pub enum LossError {
    /// A tuning constant or degrees-of-freedom parameter is out of range.
    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },
    /// The adaptive quadrature could not reach the requested tolerance
    /// within its interval budget.
    #[error("quadrature stalled at error {achieved:.3e} (requested {requested:.3e})")]
    QuadratureTolerance { achieved: f64, requested: f64 },
    /// A root bracket had no sign change, or the iteration stalled.
    #[error("root bracketing failed: {context}")]
    BracketingFailed { context: String },
    /// A pair of losses violates the required dominance ordering.
    #[error("losses are not nested: initial cutoff {c0} exceeds refinement cutoff {c1}")]
    NotNested { c0: f64, c1: f64 },
}
