//! Matrix bookkeeping shared by the estimation and diagnostics crates.
//!
//! Everything here operates on small dense `f64` matrices: half-vectorization
//! (`vech`) and its inverse, the duplication and commutation matrices that
//! relate `vec` and `vech`, Mahalanobis distances, and determinant-normalized
//! shape matrices. Positive definiteness is decided by one canonical test —
//! a successful Cholesky factorization — and determinants of positive definite
//! matrices are always computed through the Cholesky log-determinant so they
//! stay finite for dimensions well beyond what naive expansion tolerates.
//!
//! Conventions used across the workspace:
//! * `vec` stacks columns (column-major), matching the memory layout of
//!   [`DMatrix`] so it is a cheap copy.
//! * `vech` stacks the columns of the lower triangle:
//!   `(a11, a21, .., ak1, a22, a32, .., akk)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Errors for matrix utilities.
#[derive(Debug, Error)]
pub enum MatrixError {
    /// A matrix that must be positive definite failed its Cholesky test.
    #[error("matrix of dimension {dim} is not positive definite")]
    NotPositiveDefinite { dim: usize },
    /// Shape of an argument does not match what the operation requires.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    /// A matrix that must be symmetric is not, beyond the stated tolerance.
    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },
}

/// Relative tolerance for the symmetry check in [`check_symmetric`].
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Verifies `m` is square and symmetric to within `SYMMETRY_RTOL` relative
/// to its largest absolute entry.
pub fn check_symmetric(m: &DMatrix<f64>) -> Result<(), MatrixError> {
    if !m.is_square() {
        return Err(MatrixError::DimensionMismatch {
            context: format!("expected square matrix, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = m.amax().max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > SYMMETRY_RTOL * scale {
        return Err(MatrixError::NotSymmetric { max_asym });
    }
    Ok(())
}

/// Length of `vech` for a `k x k` symmetric matrix: `k(k+1)/2`.
pub fn vech_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Half-vectorization: stacks the columns of the lower triangle of `m`.
///
/// The ordering is column-major over the lower triangle,
/// `(a11, a21, .., ak1, a22, a32, .., akk)`.
pub fn vech(m: &DMatrix<f64>) -> DVector<f64> {
    let k = m.nrows();
    debug_assert!(m.is_square());
    let mut out = DVector::zeros(vech_len(k));
    let mut idx = 0;
    for j in 0..k {
        for i in j..k {
            out[idx] = m[(i, j)];
            idx += 1;
        }
    }
    out
}

/// Inverse of [`vech`]: rebuilds the symmetric `k x k` matrix.
pub fn unvech(h: &DVector<f64>) -> Result<DMatrix<f64>, MatrixError> {
    let len = h.len();
    // solve k(k+1)/2 = len for integer k
    let k = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if vech_len(k) != len {
        return Err(MatrixError::DimensionMismatch {
            context: format!("vector of length {len} is not a half-vectorization"),
        });
    }
    let mut m = DMatrix::zeros(k, k);
    let mut idx = 0;
    for j in 0..k {
        for i in j..k {
            m[(i, j)] = h[idx];
            m[(j, i)] = h[idx];
            idx += 1;
        }
    }
    Ok(m)
}

/// Column-major vectorization of a matrix.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for a square `k x k` target.
pub fn unvec(v: &DVector<f64>, k: usize) -> Result<DMatrix<f64>, MatrixError> {
    if v.len() != k * k {
        return Err(MatrixError::DimensionMismatch {
            context: format!("vector of length {} is not vec of a {k}x{k} matrix", v.len()),
        });
    }
    Ok(DMatrix::from_column_slice(k, k, v.as_slice()))
}

/// The duplication matrix `D_k` of size `k^2 x k(k+1)/2`, the unique 0/1
/// matrix with `D_k vech(C) = vec(C)` for every symmetric `C`.
pub fn duplication_matrix(k: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(k * k, vech_len(k));
    let mut col = 0;
    for j in 0..k {
        for i in j..k {
            d[(i + j * k, col)] = 1.0;
            if i != j {
                d[(j + i * k, col)] = 1.0;
            }
            col += 1;
        }
    }
    d
}

/// The commutation matrix `K_{k,k}` of size `k^2 x k^2`, defined by
/// `K vec(A) = vec(A^T)` for every `k x k` matrix `A`. It is a symmetric
/// permutation matrix and an involution (`K^2 = I`).
pub fn commutation_matrix(k: usize) -> DMatrix<f64> {
    let mut km = DMatrix::zeros(k * k, k * k);
    for r in 0..k {
        for c in 0..k {
            // entry (r,c) sits at vec index r + c*k and moves to c + r*k
            km[(c + r * k, r + c * k)] = 1.0;
        }
    }
    km
}

/// Cholesky factorization of a positive definite matrix, wrapped so callers
/// share one definition of "positive definite" and reuse the factor for
/// solves, quadratic forms, and log-determinants.
pub struct PdCholesky {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    dim: usize,
}

impl PdCholesky {
    /// Factors `m`; fails with `NotPositiveDefinite` on a non-positive pivot.
    pub fn new(m: &DMatrix<f64>) -> Result<Self, MatrixError> {
        let dim = m.nrows();
        if !m.is_square() {
            return Err(MatrixError::DimensionMismatch {
                context: format!("expected square matrix, got {}x{}", m.nrows(), m.ncols()),
            });
        }
        match nalgebra::Cholesky::new(m.clone()) {
            Some(chol) => Ok(Self { chol, dim }),
            None => Err(MatrixError::NotPositiveDefinite { dim }),
        }
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `M x = b`.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Solves `M X = B` column-wise.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// The quadratic form `e^T M^{-1} e`, guaranteed non-negative.
    ///
    /// Computed as the squared norm of the forward-substitution solve
    /// `L z = e`, which cannot go negative the way a naive
    /// `e . (M^{-1} e)` can under rounding.
    pub fn inv_quad(&self, e: &DVector<f64>) -> f64 {
        let mut z = e.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        z.norm_squared()
    }

    /// `ln |M|` via the factor diagonal; finite whenever the factorization
    /// succeeded.
    pub fn log_det(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>()
    }

    /// Explicit inverse; prefer the solve methods when possible.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// True when `m` admits a Cholesky factorization (the canonical positive
/// definiteness test used throughout the workspace).
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.is_square() && nalgebra::Cholesky::new(m.clone()).is_some()
}

/// Mahalanobis distance `sqrt((y-t)^T C^{-1} (y-t))`.
pub fn mahalanobis(
    y: &DVector<f64>,
    t: &DVector<f64>,
    c: &DMatrix<f64>,
) -> Result<f64, MatrixError> {
    let chol = PdCholesky::new(c)?;
    Ok(mahalanobis_with(y, t, &chol))
}

/// Mahalanobis distance reusing an existing factorization of `C`.
pub fn mahalanobis_with(y: &DVector<f64>, t: &DVector<f64>, chol: &PdCholesky) -> f64 {
    let e = y - t;
    chol.inv_quad(&e).sqrt()
}

/// `ln |V|` of a positive definite matrix.
pub fn log_det_pd(v: &DMatrix<f64>) -> Result<f64, MatrixError> {
    Ok(PdCholesky::new(v)?.log_det())
}

/// Determinant-normalized shape `V / |V|^{1/k}`, which has unit determinant.
pub fn shape_of(v: &DMatrix<f64>) -> Result<DMatrix<f64>, MatrixError> {
    let k = v.nrows() as f64;
    let log_det = log_det_pd(v)?;
    Ok(v * (-log_det / k).exp())
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}
