//! The pair of bounded losses driving the two estimation stages, with the
//! calibration constant of the first and the dominance check that ties them
//! together.

use crate::EstimatorError;
use loss_functions::{check_nesting, consistency_b0, tune_cutoff, Biweight, RadialLaw};

/// Losses for the two stages: `rho0` calibrates the auxiliary scale (and
/// sets the breakdown point), `rho1` drives the refinement (and sets the
/// efficiency). `rho0` standardized must dominate `rho1` standardized,
/// which for the biweight family means `c0 <= c1`.
#[derive(Debug, Clone, Copy)]
pub struct LossPair {
    /// Scale-stage loss.
    pub rho0: Biweight,
    /// Refinement-stage loss.
    pub rho1: Biweight,
    /// Calibration constant `E[rho0(R)]` under the reference law.
    pub b0: f64,
}

impl LossPair {
    /// Builds a pair from explicit cutoffs, calibrating `b0` under the
    /// normal reference law in dimension `dim`.
    pub fn from_cutoffs(dim: usize, c0: f64, c1: f64) -> Result<Self, EstimatorError> {
        let rho0 = Biweight::new(c0)?;
        let rho1 = Biweight::new(c1)?;
        check_nesting(&rho0, &rho1)?;
        let law = RadialLaw::normal(dim)?;
        let b0 = consistency_b0(&law, &rho0, 1.0)?;
        Ok(Self { rho0, rho1, b0 })
    }

    /// Builds a pair by tuning `c0` for a target breakdown fraction under
    /// the normal reference law in dimension `dim`.
    pub fn tuned(dim: usize, target_breakdown: f64, c1: f64) -> Result<Self, EstimatorError> {
        let law = RadialLaw::normal(dim)?;
        let tuned = tune_cutoff(&law, target_breakdown)?;
        let rho0 = Biweight::new(tuned.c)?;
        let rho1 = Biweight::new(c1)?;
        check_nesting(&rho0, &rho1)?;
        Ok(Self {
            rho0,
            rho1,
            b0: tuned.b0,
        })
    }

    /// The breakdown fraction `b0 / sup rho0` the scale stage is tuned to.
    pub fn breakdown(&self) -> f64 {
        self.b0 / self.rho0.sup_rho()
    }
}
