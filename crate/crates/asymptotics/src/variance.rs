//! Asymptotic covariance matrices of the MM-estimation targets at an
//! elliptical model.
//!
//! The regression block and the covariance-side blocks are asymptotically
//! independent, so each target gets its own matrix; there is no joint
//! cross-term to assemble.

use cov_structures::CovStructure;
use matrix_kit::{vec_of, PdCholesky};
use nalgebra::{DMatrix, DVector};

use crate::constants::AsymptoticConstants;
use crate::model::gram_matrix;
use crate::AsymptoticsError;

/// Which estimation target to compute the limiting covariance for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceTarget {
    /// Regression coefficients; `q x q`, requires the design moment matrix.
    Beta,
    /// Covariance parameters on the original scale; `l x l`.
    Theta,
    /// Direction (determinant-normalized) parameters; `l x l`.
    Gamma,
    /// The vectorized covariance matrix; `k^2 x k^2`.
    Covariance,
    /// The vectorized unit-determinant shape matrix; `k^2 x k^2`.
    Shape,
}

/// Limiting covariance matrix of `sqrt(n) (estimate - truth)` for the
/// requested target, at the model `V(theta_star)` with constants computed
/// at the same reference law.
///
/// `exx` is `E[X^T Sigma^{-1} X]`; it is consulted only for the regression
/// target and must be supplied there.
pub fn asymptotic_covariance(
    structure: &CovStructure,
    theta_star: &DVector<f64>,
    constants: &AsymptoticConstants,
    target: VarianceTarget,
    exx: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>, AsymptoticsError> {
    if constants.k != structure.dim() {
        return Err(AsymptoticsError::InvalidParameter {
            context: format!(
                "constants are for dimension {}, structure has dimension {}",
                constants.k,
                structure.dim()
            ),
        });
    }
    if !(constants.gamma1 > 0.0) {
        return Err(AsymptoticsError::NonPositiveGamma1 {
            gamma1: constants.gamma1,
        });
    }
    let k = constants.k as f64;
    let cs2 = constants.c_sigma * constants.c_sigma;

    if let VarianceTarget::Beta = target {
        let exx = exx.ok_or_else(|| AsymptoticsError::InvalidParameter {
            context: "regression-target variance needs the design moment matrix".into(),
        })?;
        // lambda is E[rho1'(c_sigma R)^2] / (k alpha1^2); the variance
        // multiplier carries the extra 1/c_sigma^2.
        return Ok(PdCholesky::new(exx)?.inverse() * (constants.lambda / cs2));
    }

    let sigma = structure.evaluate(theta_star)?;
    let chol = PdCholesky::new(&sigma)?;
    let gram_inv = PdCholesky::new(&gram_matrix(structure, &chol))?.inverse();
    let det_pow = (chol.log_det() / k).exp(); // |Sigma|^{1/k}

    Ok(match target {
        VarianceTarget::Beta => unreachable!("handled above"),
        VarianceTarget::Theta => {
            let spread = gram_inv * (2.0 * constants.sigma1 / cs2);
            let size = theta_star * theta_star.transpose() * constants.sigma2;
            spread + size
        }
        VarianceTarget::Gamma => {
            let centered = gram_inv - theta_star * theta_star.transpose() / k;
            centered * (2.0 * constants.sigma1 / (det_pow * det_pow))
        }
        VarianceTarget::Covariance => {
            let l = structure.coeff_matrix();
            let spread = l * &gram_inv * l.transpose() * (2.0 * constants.sigma1 / cs2);
            let vec_sigma = vec_of(&sigma);
            spread + &vec_sigma * vec_sigma.transpose() * constants.sigma2
        }
        VarianceTarget::Shape => {
            let l = structure.coeff_matrix();
            let vec_sigma = vec_of(&sigma);
            let centered = l * &gram_inv * l.transpose() - &vec_sigma * vec_sigma.transpose() / k;
            centered * (2.0 * constants.sigma1 / (cs2 * det_pow * det_pow))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::normal_constants;
    use cov_structures::unstructured;

    #[test]
    fn beta_target_requires_design_moments() {
        let structure = unstructured(2).unwrap();
        let constants = normal_constants(2, 2.5, 3.5).unwrap();
        let theta = structure.project(&DMatrix::identity(2, 2)).unwrap();
        let missing =
            asymptotic_covariance(&structure, &theta, &constants, VarianceTarget::Beta, None);
        assert!(matches!(
            missing,
            Err(AsymptoticsError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn beta_variance_inverts_the_design_moments() {
        let structure = unstructured(2).unwrap();
        let constants = normal_constants(2, 2.5, 3.5).unwrap();
        let theta = structure.project(&DMatrix::identity(2, 2)).unwrap();
        let exx = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let var = asymptotic_covariance(
            &structure,
            &theta,
            &constants,
            VarianceTarget::Beta,
            Some(&exx),
        )
        .unwrap();
        let recovered = PdCholesky::new(&var).unwrap().inverse() * constants.lambda;
        assert!((recovered - exx).amax() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let structure = unstructured(3).unwrap();
        let constants = normal_constants(2, 2.5, 3.5).unwrap();
        let theta = structure.project(&DMatrix::identity(3, 3)).unwrap();
        assert!(asymptotic_covariance(
            &structure,
            &theta,
            &constants,
            VarianceTarget::Theta,
            None
        )
        .is_err());
    }
}
