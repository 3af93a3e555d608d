//! JSON descriptors for covariance structures, as accepted on the command
//! line and in simulation configurations.
//!
//! ```json
//! {"kind": "lme", "Z": [[[1.0], [1.0], [1.0], [1.0]]]}
//! {"kind": "unstructured", "k": 3}
//! {"kind": "stationary_lag", "k": 4}
//! ```
//!
//! The `lme` form lists one row-major `k x m_j` design matrix per random
//! effect; the residual identity component is always appended implicitly.

use crate::{random_effects, stationary_lag, unstructured, CovStructure, CovStructureError};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Declarative description of a covariance structure.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind")]
pub enum StructureSpec {
    /// Variance components with the given random-effect design matrices
    /// (row-major), plus an implicit residual identity component.
    #[serde(rename = "lme")]
    Lme {
        #[serde(rename = "Z")]
        z: Vec<Vec<Vec<f64>>>,
    },
    /// Fully unstructured `k x k` covariance.
    #[serde(rename = "unstructured")]
    Unstructured { k: usize },
    /// Banded Toeplitz covariance for lags `0 .. k-1`.
    #[serde(rename = "stationary_lag")]
    StationaryLag { k: usize },
}

impl StructureSpec {
    /// Parses a descriptor from JSON text.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Materializes the described structure.
    pub fn build(&self) -> Result<CovStructure, CovStructureError> {
        match self {
            Self::Lme { z } => {
                let mut blocks = Vec::with_capacity(z.len());
                for (index, rows) in z.iter().enumerate() {
                    blocks.push(parse_row_major(rows).map_err(|reason| {
                        CovStructureError::InvalidBasis { index, reason }
                    })?);
                }
                random_effects(&blocks)
            }
            Self::Unstructured { k } => unstructured(*k),
            Self::StationaryLag { k } => stationary_lag(*k),
        }
    }
}

fn parse_row_major(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err("design matrix has no rows".to_string());
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err("design matrix has no columns".to_string());
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("design matrix rows have unequal lengths".to_string());
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
