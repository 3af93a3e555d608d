//! Linear covariance structures: families `V(theta) = sum_j theta_j B_j`
//! spanned by fixed symmetric basis matrices `B_j`.
//!
//! The estimation crates treat a structure as three things bundled together:
//! the basis itself, the `k^2 x l` coefficient matrix `L` whose columns are
//! the column-major vectorizations `vec(B_j)`, and the linear-algebra
//! conveniences built from them — evaluating `V(theta)`, projecting a
//! symmetric matrix back onto the span, and splitting a parameter vector
//! into a scale and a unit-determinant shape direction.
//!
//! Three standard families are provided: variance components for random
//! effect designs, the fully unstructured family (whose `L` is exactly the
//! duplication matrix), and banded Toeplitz covariances for stationary
//! serial dependence.

pub mod spec;

pub use spec::StructureSpec;

use matrix_kit::{check_symmetric, vec_of, PdCholesky};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Smallest acceptable ratio of extreme singular values of `L`; below this
/// the parametrization carries directions that do not move `V(theta)`.
pub const IDENTIFIABILITY_RTOL: f64 = 1e-10;

/// Errors for covariance structure construction and use.
#[derive(Debug, Error)]
pub enum CovStructureError {
    /// The basis matrices are linearly dependent (or empty), so `theta`
    /// cannot be recovered from `V(theta)`.
    #[error("structure '{name}' is not identifiable: singular value ratio {ratio:.3e}")]
    NotIdentifiable { name: String, ratio: f64 },
    /// A basis matrix is not symmetric or has the wrong size.
    #[error("invalid basis matrix at index {index}: {reason}")]
    InvalidBasis { index: usize, reason: String },
    /// A parameter vector has the wrong length for this structure.
    #[error("parameter vector of length {got} does not match {expected} basis matrices")]
    ParameterLength { got: usize, expected: usize },
    /// An operation required `V(theta)` to be positive definite but it is not.
    #[error("V(theta) is not positive definite for the given parameters")]
    NotPositiveDefinite,
    /// No basis matrices were supplied.
    #[error("a covariance structure needs at least one basis matrix")]
    EmptyBasis,
}

/// A linear covariance family `V(theta) = sum_j theta_j B_j` over symmetric
/// `k x k` basis matrices, with its vectorized coefficient matrix cached.
#[derive(Debug, Clone)]
pub struct CovStructure {
    name: String,
    dim: usize,
    basis: Vec<DMatrix<f64>>,
    /// `k^2 x l` matrix with columns `vec(B_j)`.
    coeff: DMatrix<f64>,
    /// Cached Gram inverse `(L^T L)^{-1} L^T` for span projection.
    projector: DMatrix<f64>,
}

impl CovStructure {
    /// Builds a structure from symmetric basis matrices, verifying symmetry
    /// and identifiability.
    pub fn new(
        name: impl Into<String>,
        basis: Vec<DMatrix<f64>>,
    ) -> Result<Self, CovStructureError> {
        let name = name.into();
        let dim = match basis.first() {
            Some(b) => b.nrows(),
            None => return Err(CovStructureError::EmptyBasis),
        };
        for (index, b) in basis.iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(CovStructureError::InvalidBasis {
                    index,
                    reason: format!("expected {dim}x{dim}, got {}x{}", b.nrows(), b.ncols()),
                });
            }
            check_symmetric(b).map_err(|e| CovStructureError::InvalidBasis {
                index,
                reason: e.to_string(),
            })?;
        }

        let mut coeff = DMatrix::zeros(dim * dim, basis.len());
        for (j, b) in basis.iter().enumerate() {
            coeff.set_column(j, &vec_of(b));
        }

        let svd = coeff.clone().svd(false, false);
        let s_max = svd.singular_values.max();
        let s_min = svd.singular_values.min();
        let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
        if basis.len() > dim * dim || ratio <= IDENTIFIABILITY_RTOL {
            return Err(CovStructureError::NotIdentifiable { name, ratio });
        }

        // (L^T L)^{-1} L^T: L has full column rank, so the Gram matrix is PD
        let gram = coeff.transpose() * &coeff;
        let projector = PdCholesky::new(&gram)
            .map_err(|_| CovStructureError::NotIdentifiable { name: name.clone(), ratio })?
            .solve_mat(&coeff.transpose());

        Ok(Self { name, dim, basis, coeff, projector })
    }

    /// Structure name (used in reports and error messages).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The matrix dimension `k`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free parameters `l`.
    pub fn n_params(&self) -> usize {
        self.basis.len()
    }

    /// The symmetric basis matrices.
    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// The `k^2 x l` coefficient matrix with columns `vec(B_j)`.
    pub fn coeff_matrix(&self) -> &DMatrix<f64> {
        &self.coeff
    }

    /// Evaluates `V(theta) = sum_j theta_j B_j`.
    pub fn evaluate(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>, CovStructureError> {
        if theta.len() != self.basis.len() {
            return Err(CovStructureError::ParameterLength {
                got: theta.len(),
                expected: self.basis.len(),
            });
        }
        let mut v = DMatrix::zeros(self.dim, self.dim);
        for (j, b) in self.basis.iter().enumerate() {
            v += b * theta[j];
        }
        Ok(v)
    }

    /// Projects a symmetric matrix onto the span of the basis in the
    /// least-squares sense: `argmin_theta || M - V(theta) ||_F`. Exact
    /// inverse of [`evaluate`](Self::evaluate) when `M` lies in the span.
    pub fn project(&self, m: &DMatrix<f64>) -> Result<DVector<f64>, CovStructureError> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(CovStructureError::InvalidBasis {
                index: 0,
                reason: format!(
                    "projection target is {}x{}, structure is {}x{}",
                    m.nrows(),
                    m.ncols(),
                    self.dim,
                    self.dim
                ),
            });
        }
        Ok(&self.projector * vec_of(m))
    }

    /// Splits `theta` into `(gamma, scale)` with `V(theta) = scale^2 V(gamma)`
    /// and `|V(gamma)| = 1`. Requires `V(theta)` positive definite.
    pub fn normalize_direction(
        &self,
        theta: &DVector<f64>,
    ) -> Result<(DVector<f64>, f64), CovStructureError> {
        let v = self.evaluate(theta)?;
        let chol = PdCholesky::new(&v).map_err(|_| CovStructureError::NotPositiveDefinite)?;
        let scale = (chol.log_det() / (2.0 * self.dim as f64)).exp();
        Ok((theta / (scale * scale), scale))
    }

    /// True when `V(theta)` is positive definite.
    pub fn is_positive_definite_at(&self, theta: &DVector<f64>) -> bool {
        self.evaluate(theta)
            .map(|v| matrix_kit::is_positive_definite(&v))
            .unwrap_or(false)
    }
}

/// Variance-components structure for a random-effects design:
/// `V(theta) = theta_1 Z_1 Z_1^T + .. + theta_r Z_r Z_r^T + theta_{r+1} I`.
///
/// Each `Z_j` is the `k x m_j` within-unit design matrix of one random
/// effect; the trailing identity carries the residual variance.
pub fn random_effects(z_blocks: &[DMatrix<f64>]) -> Result<CovStructure, CovStructureError> {
    let dim = match z_blocks.first() {
        Some(z) => z.nrows(),
        None => return Err(CovStructureError::EmptyBasis),
    };
    let mut basis = Vec::with_capacity(z_blocks.len() + 1);
    for (index, z) in z_blocks.iter().enumerate() {
        if z.nrows() != dim || z.ncols() == 0 {
            return Err(CovStructureError::InvalidBasis {
                index,
                reason: format!("random-effect design must be {dim}xm with m >= 1"),
            });
        }
        basis.push(z * z.transpose());
    }
    basis.push(DMatrix::identity(dim, dim));
    CovStructure::new("random-effects", basis)
}

/// Fully unstructured covariance: one basis matrix per lower-triangle entry,
/// so the coefficient matrix equals the duplication matrix exactly and
/// `theta` is the half-vectorization of `V`.
pub fn unstructured(dim: usize) -> Result<CovStructure, CovStructureError> {
    if dim == 0 {
        return Err(CovStructureError::EmptyBasis);
    }
    let mut basis = Vec::with_capacity(dim * (dim + 1) / 2);
    for j in 0..dim {
        for i in j..dim {
            let mut b = DMatrix::zeros(dim, dim);
            b[(i, j)] = 1.0;
            b[(j, i)] = 1.0;
            if i == j {
                b[(i, i)] = 1.0;
            }
            basis.push(b);
        }
    }
    CovStructure::new("unstructured", basis)
}

/// Banded Toeplitz structure for stationary serial dependence within a unit:
/// `theta_d` is the covariance at lag `d-1`, placed on the `+/-(d-1)`
/// diagonals, for lags `0 .. dim-1`.
pub fn stationary_lag(dim: usize) -> Result<CovStructure, CovStructureError> {
    if dim == 0 {
        return Err(CovStructureError::EmptyBasis);
    }
    let mut basis = Vec::with_capacity(dim);
    for lag in 0..dim {
        let mut b = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                if i.abs_diff(j) == lag {
                    b[(i, j)] = 1.0;
                }
            }
        }
        basis.push(b);
    }
    CovStructure::new("stationary-lag", basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use matrix_kit::duplication_matrix;

    #[test]
    fn unstructured_coefficients_equal_duplication_matrix() {
        for k in 1..=5 {
            let s = unstructured(k).unwrap();
            assert_eq!(s.coeff_matrix(), &duplication_matrix(k));
            assert_eq!(s.n_params(), k * (k + 1) / 2);
        }
    }

    #[test]
    fn compound_symmetry_from_single_intercept() {
        let z = DMatrix::from_element(4, 1, 1.0);
        let s = random_effects(&[z]).unwrap();
        assert_eq!(s.n_params(), 2);
        let v = s
            .evaluate(&DVector::from_vec(vec![0.5, 1.0]))
            .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.5 } else { 0.5 };
                assert!((v[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stationary_lag_is_banded_toeplitz() {
        let s = stationary_lag(3).unwrap();
        let v = s
            .evaluate(&DVector::from_vec(vec![2.0, 0.5, 0.1]))
            .unwrap();
        let want = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.5, 0.1, 0.5, 2.0, 0.5, 0.1, 0.5, 2.0],
        );
        assert_eq!(v, want);
    }

    #[test]
    fn duplicate_basis_is_rejected() {
        let b = DMatrix::identity(3, 3);
        let result = CovStructure::new("degenerate", vec![b.clone(), b]);
        assert!(matches!(
            result,
            Err(CovStructureError::NotIdentifiable { .. })
        ));
    }

    #[test]
    fn asymmetric_basis_is_rejected() {
        let mut b = DMatrix::identity(2, 2);
        b[(0, 1)] = 0.5;
        let result = CovStructure::new("bad", vec![b]);
        assert!(matches!(result, Err(CovStructureError::InvalidBasis { .. })));
    }

    #[test]
    fn parameter_length_is_checked() {
        let s = unstructured(2).unwrap();
        let theta = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            s.evaluate(&theta),
            Err(CovStructureError::ParameterLength { got: 2, expected: 3 })
        ));
    }

    #[test]
    fn normalize_direction_unit_determinant() {
        let s = unstructured(2).unwrap();
        let theta = DVector::from_vec(vec![4.0, 1.0, 2.0]);
        let (gamma, scale) = s.normalize_direction(&theta).unwrap();
        let v_gamma = s.evaluate(&gamma).unwrap();
        let det = v_gamma[(0, 0)] * v_gamma[(1, 1)] - v_gamma[(0, 1)] * v_gamma[(1, 0)];
        assert!((det - 1.0).abs() < 1e-12);
        let v_theta = s.evaluate(&theta).unwrap();
        assert!((v_gamma * scale * scale - v_theta).amax() < 1e-12);
    }

    #[test]
    fn normalize_rejects_indefinite() {
        let s = unstructured(2).unwrap();
        let theta = DVector::from_vec(vec![1.0, 2.0, 1.0]); // [[1,2],[2,1]] indefinite
        assert!(matches!(
            s.normalize_direction(&theta),
            Err(CovStructureError::NotPositiveDefinite)
        ));
    }
}
