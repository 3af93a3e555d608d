//! Monte-Carlo verification harness for the structured-covariance MM fitter.
//!
//! The crate closes the loop between the closed-form theory in `asymptotics`
//! and the finite-sample behaviour of `mm-estimators`:
//!
//! * [`generate_dataset`] draws balanced elliptical samples from a configured
//!   model, optionally contaminated, with one independent RNG stream per
//!   replication so results do not depend on scheduling order;
//! * [`monte_carlo_variance`] compares the empirical covariance of
//!   `sqrt(n) * (estimate - truth)` against the asymptotic covariance
//!   matrices, block by block;
//! * [`sensitivity_curve`] traces finite-sample contamination quotients
//!   `(T((1-h) P + h delta) - T(P)) / h` and extrapolates them to `h -> 0`
//!   for comparison with the influence function;
//! * [`empirical_breakdown`] attacks a dataset with adversarial point masses
//!   of growing size and reports the smallest contaminated fraction that
//!   makes the fit diverge, next to the finite-sample breakdown bound.
//!
//! Everything is deterministic given the configured seed: replication `r`
//! draws from stream `r` of a counter-based generator, and the fitter itself
//! is bitwise reproducible across thread counts.

mod breakdown_experiment;
mod config;
mod generate;
mod sensitivity;
mod variance_study;

pub use breakdown_experiment::{
    empirical_breakdown, AttackPattern, BreakdownExperiment, BreakdownOptions, BreakdownProbe,
    DivergenceRecord,
};
pub use config::{
    ContaminationSpec, DesignSpec, FitOverrides, LawSpec, SimConfig, TuningSpec,
};
pub use generate::{draw_spherical, generate_dataset, generate_designs};
pub use sensitivity::{sensitivity_curve, SensitivityCurve, SensitivityPoint};
pub use variance_study::{
    monte_carlo_variance, run_replications, variance_summary, BlockComparison, CrossCheck,
    ReplicationRecord, VarianceStudy,
};

use cov_structures::CovStructureError;
use loss_functions::LossError;
use matrix_kit::MatrixError;
use mm_estimators::EstimatorError;

/// Errors produced while configuring or running simulation studies.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// The configuration is internally inconsistent (bad fraction, too few
    /// observations, conflicting tuning fields, ...).
    #[error("invalid simulation config: {context}")]
    InvalidConfig { context: String },
    /// The configuration file could not be parsed.
    #[error("unreadable simulation config: {0}")]
    Parse(#[from] serde_json::Error),
    /// A fit that the study cannot proceed without (for example the clean
    /// baseline fit of a sensitivity curve) failed.
    #[error("estimation failed: {0}")]
    Estimator(#[from] EstimatorError),
    /// A closed-form reference quantity could not be computed.
    #[error("asymptotic reference failed: {0}")]
    Reference(#[from] asymptotics::AsymptoticsError),
    /// Covariance-structure evaluation failed.
    #[error("covariance structure error: {0}")]
    Structure(#[from] CovStructureError),
    /// Loss-function or quadrature failure.
    #[error("loss computation error: {0}")]
    Loss(#[from] LossError),
    /// Dense linear algebra failure.
    #[error("matrix error: {0}")]
    Matrix(#[from] MatrixError),
}
