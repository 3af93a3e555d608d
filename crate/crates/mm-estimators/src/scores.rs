//! Estimating-equation evaluation, independent of the optimizer.
//!
//! The refinement stage is characterized by averaged scores equal to zero.
//! Two algebraically distinct evaluation routes are provided for the shape
//! block and both are reported: a componentwise route built from the
//! per-parameter matrices `H_j`, and a matrix route that assembles a single
//! `k x k` score matrix and contracts it against the structure's basis.
//! On the unit-determinant manifold, where the estimator lives, the two
//! coincide identically; away from it they differ by determinant-penalty
//! terms that enter the two routes with different signs, so they are only
//! comparable at `|V(gamma)| = 1`.
//!
//! Letting `e_i = y_i - X_i beta`, `d_i` the Mahalanobis distance under
//! `V = V(gamma)`, `u = rho1'(s)/s` and `v = rho1'(s) s`:
//!
//! * regression block: `mean_i u(d_i/sigma) X_i^T V^{-1} e_i`,
//! * matrix route: `Psi_V = mean_i [k u(d_i/sigma) e_i e_i^T
//!   - v(d_i/sigma) sigma^2 V] - V ln|V|`, contracted into
//!   `-[tr(B_j V^{-1} Psi_V V^{-1})]_j`,
//! * componentwise route: `mean_i u(d_i/sigma) e_i^T V^{-1} H_j V^{-1} e_i
//!   - tr(V^{-1} B_j) ln|V|` with `H_j = tr(V^{-1} B_j) V - k B_j`.

use crate::initial::distances;
use crate::{Dataset, EstimatorError};
use cov_structures::CovStructure;
use loss_functions::Biweight;
use matrix_kit::PdCholesky;
use nalgebra::{DMatrix, DVector};

/// Averaged estimating equations at a parameter point.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    /// Averaged regression score (length `q`).
    pub beta_score: DVector<f64>,
    /// Averaged shape score, matrix route (length `l`).
    pub shape_score: DVector<f64>,
    /// Averaged shape score, componentwise route (length `l`).
    pub shape_score_componentwise: DVector<f64>,
    /// `max(|beta_score|, |shape_score|)` in the sup norm.
    pub sup_norm: f64,
}

/// The per-parameter shape matrices `H_j = tr(V^{-1} B_j) V - k B_j` at
/// `V = V(gamma)`. They satisfy `sum_j gamma_j H_j = 0` identically.
pub fn h_matrices(
    structure: &CovStructure,
    gamma: &DVector<f64>,
) -> Result<Vec<DMatrix<f64>>, EstimatorError> {
    let v = structure.evaluate(gamma)?;
    let chol = PdCholesky::new(&v)?;
    let k = structure.dim() as f64;
    Ok(structure
        .basis()
        .iter()
        .map(|b| {
            let trace = chol.solve_mat(b).trace();
            &v * trace - b * k
        })
        .collect())
}

/// Evaluates all averaged scores at `(beta, gamma, sigma)`.
pub fn evaluate_scores(
    data: &Dataset,
    structure: &CovStructure,
    rho1: &Biweight,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
    sigma: f64,
) -> Result<ScoreReport, EstimatorError> {
    let v = structure.evaluate(gamma)?;
    let chol = PdCholesky::new(&v)?;
    let d = distances(data, &chol, beta);
    let (beta_score, shape_score) =
        mean_scores_matrix_route(data, structure, rho1, beta, &v, &chol, &d, sigma)?;

    // componentwise route
    let log_det = chol.log_det();
    let k = data.dim() as f64;
    let n = data.n() as f64;
    let h: Vec<DMatrix<f64>> = structure
        .basis()
        .iter()
        .map(|b| {
            let trace = chol.solve_mat(b).trace();
            &v * trace - b * k
        })
        .collect();
    let mut componentwise = DVector::zeros(structure.n_params());
    for i in 0..data.n() {
        let e = data.y(i) - data.x(i) * beta;
        let z = chol.solve_vec(&e); // V^{-1} e
        let u = rho1.u_weight(d[i] / sigma);
        if u == 0.0 {
            continue;
        }
        for (j, hj) in h.iter().enumerate() {
            componentwise[j] += u * z.dot(&(hj * &z));
        }
    }
    componentwise /= n;
    for (j, b) in structure.basis().iter().enumerate() {
        componentwise[j] -= chol.solve_mat(b).trace() * log_det;
    }

    let sup_norm = beta_score.amax().max(shape_score.amax());
    Ok(ScoreReport {
        beta_score,
        shape_score,
        shape_score_componentwise: componentwise,
        sup_norm,
    })
}

/// Sup-norm of the averaged scores via the matrix route; used by the
/// refinement loop as its convergence criterion.
#[allow(clippy::too_many_arguments)]
pub(crate) fn score_on_unit_shape(
    data: &Dataset,
    structure: &CovStructure,
    rho1: &Biweight,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
    chol: &PdCholesky,
    d: &[f64],
    sigma: f64,
) -> Result<f64, EstimatorError> {
    let v = structure.evaluate(gamma)?;
    let (beta_score, shape_score) =
        mean_scores_matrix_route(data, structure, rho1, beta, &v, chol, d, sigma)?;
    Ok(beta_score.amax().max(shape_score.amax()))
}

/// Averaged regression score and matrix-route shape score.
#[allow(clippy::too_many_arguments)]
fn mean_scores_matrix_route(
    data: &Dataset,
    structure: &CovStructure,
    rho1: &Biweight,
    beta: &DVector<f64>,
    v: &DMatrix<f64>,
    chol: &PdCholesky,
    d: &[f64],
    sigma: f64,
) -> Result<(DVector<f64>, DVector<f64>), EstimatorError> {
    let k = data.dim() as f64;
    let n = data.n() as f64;
    let log_det = chol.log_det();

    let mut beta_score = DVector::zeros(data.n_coef());
    let mut psi_v = DMatrix::zeros(data.dim(), data.dim());
    let mut v_sum = 0.0;
    for i in 0..data.n() {
        let e = data.y(i) - data.x(i) * beta;
        let z = chol.solve_vec(&e); // V^{-1} e
        let s = d[i] / sigma;
        let u = rho1.u_weight(s);
        v_sum += rho1.v_weight(s);
        if u != 0.0 {
            beta_score += data.x(i).transpose() * &z * u;
            psi_v += &e * e.transpose() * (k * u);
        }
    }
    beta_score /= n;
    psi_v /= n;
    psi_v -= v * (sigma * sigma * v_sum / n);
    psi_v -= v * log_det;

    // -L^T (V^{-1} (x) V^{-1}) vec(Psi_V), computed as
    // -tr(B_j V^{-1} Psi_V V^{-1}) per component
    let inner = chol.solve_mat(&chol.solve_mat(&psi_v).transpose());
    let mut shape_score = DVector::zeros(structure.n_params());
    for (j, b) in structure.basis().iter().enumerate() {
        shape_score[j] = -(b * &inner).trace();
    }
    Ok((beta_score, shape_score))
}
