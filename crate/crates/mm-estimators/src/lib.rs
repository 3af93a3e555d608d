//! Robust fitting for balanced multivariate linear models
//! `y_i = X_i beta + u_i` with structured error covariance
//! `V(theta) = sum_j theta_j B_j`.
//!
//! The estimator runs in three stages:
//!
//! 1. an initial high-breakdown fit found by randomized elemental-subset
//!    search with concentration refinement ([`initial`]),
//! 2. an auxiliary M-scale of the initial Mahalanobis distances
//!    ([`scale`]), which is then *frozen*, and
//! 3. a weighted-least-squares fixed point that refines the regression
//!    coefficients and the unit-determinant covariance shape while the
//!    frozen scale keeps the breakdown point of the initial stage
//!    ([`refine`]).
//!
//! The refinement minimizes the average of a bounded loss of
//! `distance / scale`; its estimating equations can be evaluated
//! independently of the optimizer ([`scores`]), which is how the tests
//! confirm that the fixed point actually solves them.

pub mod dataset;
pub mod initial;
pub mod losses;
pub mod refine;
pub mod scale;
pub mod scores;

pub use dataset::Dataset;
pub use initial::{initial_fit, InitialFit};
pub use losses::LossPair;
pub use refine::{fit_mm, mm_refine, FitConfig, FitResult};
pub use scale::m_scale;
pub use scores::{evaluate_scores, h_matrices, ScoreReport};

use thiserror::Error;

/// Errors from the fitting pipeline.
#[derive(Debug, Error)]
pub enum EstimatorError {
    /// Input arrays are inconsistent (mismatched lengths or shapes).
    #[error("invalid dataset: {context}")]
    InvalidData { context: String },
    /// The M-scale equation has no positive solution because too many
    /// distances are exactly zero.
    #[error(
        "degenerate residuals: {n_zero} of {n} distances are zero, \
         the scale equation has no positive solution"
    )]
    DegenerateResiduals { n_zero: usize, n: usize },
    /// No elemental subset produced a usable starting candidate.
    #[error("subset search failed: all {attempts} candidate starts were singular")]
    SingularSubsets { attempts: usize },
    /// Too few observations for the requested model.
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    /// A weighted design matrix lost full column rank during iteration.
    #[error("weighted design is rank deficient: {context}")]
    RankDeficient { context: String },
    /// All refinement weights vanished (every distance beyond the cutoff).
    #[error("all observations received zero weight at scale {sigma:.3e}")]
    AllWeightsZero { sigma: f64 },
    /// Structure-level failure (non-identifiable basis, wrong sizes).
    #[error(transparent)]
    Structure(#[from] cov_structures::CovStructureError),
    /// Scalar solver failure from the loss/scale layer.
    #[error(transparent)]
    Loss(#[from] loss_functions::LossError),
    /// Linear-algebra failure (non-positive-definite where required).
    #[error(transparent)]
    Matrix(#[from] matrix_kit::MatrixError),
}
