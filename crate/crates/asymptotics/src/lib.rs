//! Closed-form robustness and efficiency diagnostics for the multivariate
//! MM-estimators at elliptical reference models.
//!
//! Everything here is analytic rather than simulated: the scalar constants
//! that govern first-order behavior ([`AsymptoticConstants`]), influence
//! functions of every estimation target ([`influence_function`]), asymptotic
//! covariance matrices ([`asymptotic_covariance`]), gross-error-sensitivity
//! indices, maximum-likelihood reference constants under Student models for
//! relative-efficiency tables, and the finite-sample breakdown lower bound
//! ([`breakdown_bound`]). The companion simulation crate checks these
//! formulas against Monte-Carlo experiments; this crate is the side that
//! integrates densities instead of drawing from them.

pub mod breakdown;
pub mod constants;
pub mod influence;
mod model;
pub mod student;
pub mod sweep;
pub mod variance;

pub use breakdown::{
    breakdown_bound, kappa_exact, kappa_general_position, max_r0, BreakdownBound,
    KAPPA_EXACT_MAX_N,
};
pub use constants::{
    breakdown_tuned_cutoff, compute_constants, normal_constants, AsymptoticConstants,
};
pub use influence::{
    alpha_c, beta_c, influence_beta, influence_covariance, influence_function, influence_gamma,
    influence_shape, influence_theta, InfluenceInput, InfluenceOutput, InfluenceTarget,
};
pub use student::{ml_student_constants, student_relative_minima, StudentRelativeMinima,
    StudentWeight};
pub use sweep::{
    efficiency_sweep, minimize_over_cutoff, SweepOutcome, SweepQuantity, SweepRow, SweepTable,
};
pub use variance::{asymptotic_covariance, VarianceTarget};

use thiserror::Error;

/// Failure modes of the closed-form diagnostics.
#[derive(Debug, Error)]
pub enum AsymptoticsError {
    /// The curvature constant of the shape score is not positive, so the
    /// influence-function and variance formulas do not apply at this tuning.
    #[error("shape curvature constant gamma1 = {gamma1} is not positive; influence and variance formulas are inapplicable")]
    NonPositiveGamma1 { gamma1: f64 },

    /// A moment integral failed to converge; the requested reference law
    /// does not support this expectation to tolerance.
    #[error("moment does not integrate to tolerance: {context}")]
    NonIntegrable { context: String },

    /// An argument is outside the domain of the requested operation.
    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },

    /// A hypothesis that the requested bound relies on does not hold for
    /// these inputs.
    #[error("hypothesis violated: {context}")]
    PreconditionViolated { context: String },

    /// Exact hyperplane counting enumerates all subsets and is capped.
    #[error("exact hyperplane count supports at most {max} points, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error(transparent)]
    Loss(#[from] loss_functions::LossError),

    #[error(transparent)]
    Structure(#[from] cov_structures::CovStructureError),

    #[error(transparent)]
    Matrix(#[from] matrix_kit::MatrixError),
}
