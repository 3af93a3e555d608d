//! Balanced multivariate regression data: `n` units, each with a response
//! vector `y_i` of length `k` and a design matrix `X_i` of size `k x q`.

use crate::EstimatorError;
use nalgebra::{DMatrix, DVector};

/// A balanced dataset: every unit shares the response dimension `k` and the
/// coefficient dimension `q`.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<DVector<f64>>,
    x: Vec<DMatrix<f64>>,
    dim: usize,
    n_coef: usize,
}

impl Dataset {
    /// Bundles responses and designs, validating shape consistency.
    pub fn new(y: Vec<DVector<f64>>, x: Vec<DMatrix<f64>>) -> Result<Self, EstimatorError> {
        if y.is_empty() || y.len() != x.len() {
            return Err(EstimatorError::InvalidData {
                context: format!(
                    "got {} responses and {} design matrices",
                    y.len(),
                    x.len()
                ),
            });
        }
        let dim = y[0].len();
        let n_coef = x[0].ncols();
        if dim == 0 || n_coef == 0 {
            return Err(EstimatorError::InvalidData {
                context: "response dimension and coefficient count must be positive".into(),
            });
        }
        for (i, (yi, xi)) in y.iter().zip(&x).enumerate() {
            if yi.len() != dim || xi.nrows() != dim || xi.ncols() != n_coef {
                return Err(EstimatorError::InvalidData {
                    context: format!(
                        "unit {i}: y is {}, X is {}x{}, expected {dim} and {dim}x{n_coef}",
                        yi.len(),
                        xi.nrows(),
                        xi.ncols()
                    ),
                });
            }
            if yi.iter().any(|v| !v.is_finite()) || xi.iter().any(|v| !v.is_finite()) {
                return Err(EstimatorError::InvalidData {
                    context: format!("unit {i} contains a non-finite value"),
                });
            }
        }
        Ok(Self { y, x, dim, n_coef })
    }

    /// Number of units `n`.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Response dimension `k`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of regression coefficients `q`.
    pub fn n_coef(&self) -> usize {
        self.n_coef
    }

    /// Response of unit `i`.
    pub fn y(&self, i: usize) -> &DVector<f64> {
        &self.y[i]
    }

    /// Design matrix of unit `i`.
    pub fn x(&self, i: usize) -> &DMatrix<f64> {
        &self.x[i]
    }

    /// All residuals `y_i - X_i beta`.
    pub fn residuals(&self, beta: &DVector<f64>) -> Vec<DVector<f64>> {
        self.y
            .iter()
            .zip(&self.x)
            .map(|(yi, xi)| yi - xi * beta)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shapes() {
        let y = vec![DVector::zeros(2), DVector::zeros(3)];
        let x = vec![DMatrix::zeros(2, 1), DMatrix::zeros(3, 1)];
        assert!(matches!(
            Dataset::new(y, x),
            Err(EstimatorError::InvalidData { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let mut y0 = DVector::zeros(2);
        y0[1] = f64::NAN;
        let y = vec![y0];
        let x = vec![DMatrix::zeros(2, 1)];
        assert!(matches!(
            Dataset::new(y, x),
            Err(EstimatorError::InvalidData { .. })
        ));
    }

    #[test]
    fn residuals_subtract_fitted_values() {
        let y = vec![DVector::from_vec(vec![3.0, 5.0])];
        let x = vec![DMatrix::from_column_slice(2, 1, &[1.0, 2.0])];
        let data = Dataset::new(y, x).unwrap();
        let r = data.residuals(&DVector::from_vec(vec![2.0]));
        assert_eq!(r[0], DVector::from_vec(vec![1.0, 1.0]));
    }
}
