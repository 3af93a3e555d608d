//! Influence functions of the MM-estimation targets under point-mass
//! contamination at an elliptical model.
//!
//! The contamination point enters only through its standardized residual
//! `z0 = Sigma^{-1/2}(y0 - X0 beta*)` and its design block `X0`. Two scalar
//! gain curves carry all the loss-function dependence: [`alpha_c`]
//! multiplies the shape-direction response and [`beta_c`] the size
//! response. Scale-invariant targets (shape and direction) depend on
//! `alpha_c` only, so they are immune to how the auxiliary scale reacts.

use cov_structures::CovStructure;
use loss_functions::Biweight;
use matrix_kit::PdCholesky;
use nalgebra::{DMatrix, DVector};

use crate::constants::AsymptoticConstants;
use crate::model::{gram_matrix, inv_sqrt_pd};
use crate::AsymptoticsError;

/// Which estimation target to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluenceTarget {
    /// Regression coefficients.
    Beta,
    /// Covariance parameters on the original scale.
    Theta,
    /// Direction (determinant-normalized covariance parameters).
    Gamma,
    /// The assembled covariance matrix.
    Covariance,
    /// The assembled unit-determinant shape matrix.
    Shape,
}

/// A vector- or matrix-valued influence function, depending on the target.
#[derive(Debug, Clone, PartialEq)]
pub enum InfluenceOutput {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

impl InfluenceOutput {
    /// The vector payload, if this target is vector-valued.
    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            InfluenceOutput::Vector(v) => Some(v),
            InfluenceOutput::Matrix(_) => None,
        }
    }

    /// The matrix payload, if this target is matrix-valued.
    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            InfluenceOutput::Matrix(m) => Some(m),
            InfluenceOutput::Vector(_) => None,
        }
    }

    /// Entrywise supremum norm, target shape notwithstanding.
    pub fn amax(&self) -> f64 {
        match self {
            InfluenceOutput::Vector(v) => v.amax(),
            InfluenceOutput::Matrix(m) => m.amax(),
        }
    }
}

/// A contamination point and the model it perturbs.
#[derive(Debug, Clone)]
pub struct InfluenceInput<'a> {
    structure: &'a CovStructure,
    theta_star: DVector<f64>,
    sigma: DMatrix<f64>,
    z0: DVector<f64>,
    x0: DMatrix<f64>,
    exx: DMatrix<f64>,
    constants: AsymptoticConstants,
}

impl<'a> InfluenceInput<'a> {
    /// Builds an input from the standardized residual `z0` directly.
    ///
    /// `exx` is the design second-moment matrix `E[X^T Sigma^{-1} X]`;
    /// supply the exact matrix for fixed designs or a sample average.
    pub fn new(
        structure: &'a CovStructure,
        theta_star: DVector<f64>,
        z0: DVector<f64>,
        x0: DMatrix<f64>,
        exx: DMatrix<f64>,
        constants: AsymptoticConstants,
    ) -> Result<Self, AsymptoticsError> {
        let k = structure.dim();
        if constants.k != k {
            return Err(AsymptoticsError::InvalidParameter {
                context: format!(
                    "constants are for dimension {}, structure has dimension {k}",
                    constants.k
                ),
            });
        }
        if z0.len() != k || x0.nrows() != k {
            return Err(AsymptoticsError::InvalidParameter {
                context: format!(
                    "contamination point has {} rows / residual length {}, expected {k}",
                    x0.nrows(),
                    z0.len()
                ),
            });
        }
        if exx.nrows() != x0.ncols() || exx.ncols() != x0.ncols() {
            return Err(AsymptoticsError::InvalidParameter {
                context: format!(
                    "design moment matrix is {}x{}, expected {q}x{q}",
                    exx.nrows(),
                    exx.ncols(),
                    q = x0.ncols()
                ),
            });
        }
        let sigma = structure.evaluate(&theta_star)?;
        // fail early if theta_star is not an admissible covariance
        PdCholesky::new(&sigma)?;
        if !(constants.gamma1 > 0.0) {
            return Err(AsymptoticsError::NonPositiveGamma1 {
                gamma1: constants.gamma1,
            });
        }
        Ok(InfluenceInput {
            structure,
            theta_star,
            sigma,
            z0,
            x0,
            exx,
            constants,
        })
    }

    /// Builds an input from a raw observation `(y0, X0)` by standardizing
    /// its residual against the model covariance.
    pub fn from_observation(
        structure: &'a CovStructure,
        theta_star: DVector<f64>,
        beta_star: &DVector<f64>,
        y0: &DVector<f64>,
        x0: DMatrix<f64>,
        exx: DMatrix<f64>,
        constants: AsymptoticConstants,
    ) -> Result<Self, AsymptoticsError> {
        if beta_star.len() != x0.ncols() {
            return Err(AsymptoticsError::InvalidParameter {
                context: format!(
                    "coefficient length {} does not match design width {}",
                    beta_star.len(),
                    x0.ncols()
                ),
            });
        }
        let sigma = structure.evaluate(&theta_star)?;
        let z0 = inv_sqrt_pd(&sigma)? * (y0 - &x0 * beta_star);
        Self::new(structure, theta_star, z0, x0, exx, constants)
    }

    /// The standardized residual of the contamination point.
    pub fn z0(&self) -> &DVector<f64> {
        &self.z0
    }

    /// The model covariance this input perturbs.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

/// Gain of the shape-direction response at standardized radius `s`:
/// `k u1(s) / gamma1` with `u1` the efficiency-loss weight.
pub fn alpha_c(constants: &AsymptoticConstants, s: f64) -> Result<f64, AsymptoticsError> {
    let rho1 = Biweight::new(constants.c1)?;
    Ok(constants.k as f64 * rho1.u_weight(s) / constants.gamma1)
}

/// Gain of the size response at standardized radius `s`: the shape-score
/// contribution `rho1'(s) s / gamma1` minus twice the standardized scale
/// deviation `(rho0(s) - b0) / E[rho0'(S) S]`, divided by `c_sigma^2`.
pub fn beta_c(constants: &AsymptoticConstants, s: f64) -> Result<f64, AsymptoticsError> {
    let rho0 = Biweight::new(constants.c0)?;
    let rho1 = Biweight::new(constants.c1)?;
    let shape_part = rho1.drho(s) * s / constants.gamma1;
    let scale_part = 2.0 * (rho0.rho(s) - constants.b0) / constants.scale_slope;
    Ok((shape_part - scale_part) / (constants.c_sigma * constants.c_sigma))
}

/// Shared pieces of the covariance-side influence functions.
struct ShapeResponse {
    /// `A^{-1} U` where `A` is the structure Gram matrix at `Sigma` and
    /// `U_i = z0^T Sigma^{-1/2} B_i Sigma^{-1/2} z0`.
    direction: DVector<f64>,
    /// Standardized radius `c_sigma ||z0||`.
    s: f64,
    /// `||z0||^2`.
    z_norm_sq: f64,
}

fn shape_response(input: &InfluenceInput) -> Result<ShapeResponse, AsymptoticsError> {
    let chol = PdCholesky::new(&input.sigma)?;
    let gram = gram_matrix(input.structure, &chol);
    let gram_chol = PdCholesky::new(&gram)?;
    let w = inv_sqrt_pd(&input.sigma)? * &input.z0;
    let u = DVector::from_iterator(
        input.structure.n_params(),
        input.structure.basis().iter().map(|b| (w.transpose() * b * &w)[(0, 0)]),
    );
    let z_norm_sq = input.z0.norm_squared();
    Ok(ShapeResponse {
        direction: gram_chol.solve_vec(&u),
        s: input.constants.c_sigma * z_norm_sq.sqrt(),
        z_norm_sq,
    })
}

/// Influence function of the regression coefficients:
/// `(u1(c_sigma ||z0||) / alpha1) (E[X^T Sigma^{-1} X])^{-1} X0^T Sigma^{-1/2} z0`.
pub fn influence_beta(input: &InfluenceInput) -> Result<DVector<f64>, AsymptoticsError> {
    let rho1 = Biweight::new(input.constants.c1)?;
    let s = input.constants.c_sigma * input.z0.norm();
    let gain = rho1.u_weight(s) / input.constants.alpha1;
    let exx_chol = PdCholesky::new(&input.exx)?;
    let half_residual = inv_sqrt_pd(&input.sigma)? * &input.z0;
    Ok(exx_chol.solve_vec(&(input.x0.transpose() * half_residual)) * gain)
}

/// Influence function of the covariance parameters on the original scale:
/// `alpha_c(s) A^{-1} U - beta_c(s) theta*`.
pub fn influence_theta(input: &InfluenceInput) -> Result<DVector<f64>, AsymptoticsError> {
    let response = shape_response(input)?;
    let a = alpha_c(&input.constants, response.s)?;
    let b = beta_c(&input.constants, response.s)?;
    Ok(response.direction * a - &input.theta_star * b)
}

/// Influence function of the direction parameters (the determinant-
/// normalized coordinates). Depends only on the shape gain `alpha_c`.
pub fn influence_gamma(input: &InfluenceInput) -> Result<DVector<f64>, AsymptoticsError> {
    let response = shape_response(input)?;
    let a = alpha_c(&input.constants, response.s)?;
    let sigma_sq = scale_functional_sq(input)?;
    let centered =
        response.direction - &input.theta_star * (response.z_norm_sq / input.constants.k as f64);
    Ok(centered * (a / sigma_sq))
}

/// Influence function of the assembled covariance matrix: the structure
/// basis contracted against [`influence_theta`].
pub fn influence_covariance(input: &InfluenceInput) -> Result<DMatrix<f64>, AsymptoticsError> {
    let theta_if = influence_theta(input)?;
    Ok(input.structure.evaluate(&theta_if)?)
}

/// Influence function of the unit-determinant shape matrix. Depends only
/// on the shape gain `alpha_c`.
pub fn influence_shape(input: &InfluenceInput) -> Result<DMatrix<f64>, AsymptoticsError> {
    let response = shape_response(input)?;
    let a = alpha_c(&input.constants, response.s)?;
    let sigma_sq = scale_functional_sq(input)?;
    let spread = input.structure.evaluate(&response.direction)?;
    let iso = &input.sigma * (response.z_norm_sq / input.constants.k as f64);
    Ok((spread - iso) * (a / sigma_sq))
}

/// The squared limit of the auxiliary scale, `|Sigma|^{1/k} / c_sigma^2`.
fn scale_functional_sq(input: &InfluenceInput) -> Result<f64, AsymptoticsError> {
    let k = input.constants.k as f64;
    let log_det = PdCholesky::new(&input.sigma)?.log_det();
    Ok((log_det / k).exp() / (input.constants.c_sigma * input.constants.c_sigma))
}

/// Dispatches to the per-target influence functions.
pub fn influence_function(
    input: &InfluenceInput,
    target: InfluenceTarget,
) -> Result<InfluenceOutput, AsymptoticsError> {
    Ok(match target {
        InfluenceTarget::Beta => InfluenceOutput::Vector(influence_beta(input)?),
        InfluenceTarget::Theta => InfluenceOutput::Vector(influence_theta(input)?),
        InfluenceTarget::Gamma => InfluenceOutput::Vector(influence_gamma(input)?),
        InfluenceTarget::Covariance => InfluenceOutput::Matrix(influence_covariance(input)?),
        InfluenceTarget::Shape => InfluenceOutput::Matrix(influence_shape(input)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::normal_constants;
    use cov_structures::unstructured;

    fn toy_input() -> (CovStructure, AsymptoticConstants, DMatrix<f64>) {
        let structure = unstructured(2).unwrap();
        let constants = normal_constants(2, 2.5, 3.5).unwrap();
        let sigma = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 1.0]);
        (structure, constants, sigma)
    }

    #[test]
    fn validates_dimensions() {
        let (structure, constants, sigma) = toy_input();
        let theta = structure.project(&sigma).unwrap();
        let bad_z = DVector::zeros(3);
        let x0 = DMatrix::identity(2, 2);
        let exx = DMatrix::identity(2, 2);
        assert!(
            InfluenceInput::new(&structure, theta.clone(), bad_z, x0.clone(), exx.clone(), constants)
                .is_err()
        );
        let bad_exx = DMatrix::identity(3, 3);
        assert!(InfluenceInput::new(
            &structure,
            theta,
            DVector::zeros(2),
            x0,
            bad_exx,
            constants
        )
        .is_err());
    }

    #[test]
    fn observation_constructor_standardizes() {
        let (structure, constants, sigma) = toy_input();
        let theta = structure.project(&sigma).unwrap();
        let beta = DVector::from_vec(vec![1.0, -1.0]);
        let x0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let y0 = &x0 * &beta; // zero residual
        let input = InfluenceInput::from_observation(
            &structure,
            theta,
            &beta,
            &y0,
            x0,
            DMatrix::identity(2, 2),
            constants,
        )
        .unwrap();
        assert!(input.z0().norm() < 1e-14);
    }
}
