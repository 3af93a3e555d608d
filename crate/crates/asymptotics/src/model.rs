//! Shared linear-algebra helpers for the elliptical-model diagnostics:
//! the structure Gram matrix and symmetric square roots.

use cov_structures::CovStructure;
use matrix_kit::{MatrixError, PdCholesky};
use nalgebra::{DMatrix, SymmetricEigen};

use crate::AsymptoticsError;

/// Gram matrix of the structure basis in the metric of `sigma`:
/// `A[i][j] = tr(B_i Sigma^{-1} B_j Sigma^{-1})`.
///
/// This is the compressed form of `L^T (Sigma^{-1} ⊗ Sigma^{-1}) L`; it
/// never materializes the `k^2 x k^2` Kronecker product.
pub(crate) fn gram_matrix(structure: &CovStructure, sigma_chol: &PdCholesky) -> DMatrix<f64> {
    let solved: Vec<DMatrix<f64>> = structure
        .basis()
        .iter()
        .map(|b| sigma_chol.solve_mat(b))
        .collect();
    let l = solved.len();
    let mut gram = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let value = (&solved[i] * &solved[j]).trace();
            gram[(i, j)] = value;
            gram[(j, i)] = value;
        }
    }
    gram
}

/// Symmetric inverse square root `M^{-1/2}` of a positive-definite matrix,
/// via its eigendecomposition.
pub(crate) fn inv_sqrt_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, AsymptoticsError> {
    let dim = m.nrows();
    let eigen = SymmetricEigen::new(m.clone());
    if eigen.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(AsymptoticsError::Matrix(MatrixError::NotPositiveDefinite {
            dim,
        }));
    }
    let scaled = {
        let mut q = eigen.eigenvectors.clone();
        for (j, &l) in eigen.eigenvalues.iter().enumerate() {
            q.column_mut(j).scale_mut(l.powf(-0.5));
        }
        q
    };
    Ok(&scaled * eigen.eigenvectors.transpose())
}
