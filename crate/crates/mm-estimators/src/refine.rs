//! Refinement stage: minimizes the average bounded loss of
//! `distance / sigma` over regression coefficients and unit-determinant
//! covariance shapes, with the scale `sigma` frozen at its auxiliary value.
//!
//! The minimizer is a weighted-least-squares fixed point. Each sweep
//! solves the regression score exactly for `beta` given the shape, then
//! solves the shape score exactly in the structure's coordinates given the
//! new residuals, renormalizing the determinant. A sweep that fails to
//! decrease the objective is replaced by a damped step (the candidate is
//! pulled back towards the current iterate, in the parameter space where
//! the covariance family is linear), so the objective is non-increasing.
//! Because the iteration starts at the initial fit, its objective never
//! rises above the initial objective — the constraint that transfers the
//! initial stage's breakdown point to the refined fit.

use crate::initial::{distances, initial_fit, shape_cholesky, weighted_gls};
use crate::scores::score_on_unit_shape;
use crate::{Dataset, EstimatorError, LossPair};
use cov_structures::CovStructure;
use loss_functions::Biweight;
use matrix_kit::PdCholesky;
use nalgebra::{DMatrix, DVector};

/// Controls for the subset search and the refinement loop.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Elemental subsets to draw in the initial stage.
    pub n_subsets: usize,
    /// Concentration steps applied to every candidate.
    pub concentration_steps: usize,
    /// Candidates concentrated to convergence before the winner is picked.
    pub n_finalists: usize,
    /// Sweep cap for the refinement fixed point.
    pub max_iter: usize,
    /// Convergence: sup-norm of the averaged estimating equations.
    pub score_tol: f64,
    /// Cap on objective-restoring halvings within one sweep.
    pub halving_cap: usize,
    /// Seed for the subset draws (the only source of randomness).
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_subsets: 500,
            concentration_steps: 2,
            n_finalists: 10,
            max_iter: 500,
            score_tol: 1e-8,
            halving_cap: 30,
            seed: 0,
        }
    }
}

/// A fitted model.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Regression coefficients.
    pub beta: DVector<f64>,
    /// Unit-determinant shape direction of the error covariance.
    pub gamma: DVector<f64>,
    /// Auxiliary scale (frozen during refinement).
    pub sigma: f64,
    /// Covariance parameters on the original scale:
    /// `V(theta) = sigma^2 V(gamma)`.
    pub theta: DVector<f64>,
    /// Average refinement loss at the solution.
    pub objective: f64,
    /// Sup-norm of the averaged estimating equations at the solution.
    pub score_norm: f64,
    /// Whether `score_norm <= score_tol` was reached within the sweep cap.
    pub converged: bool,
    /// Refinement sweeps performed.
    pub n_iter: usize,
    /// Seed the fit was produced with.
    pub seed: u64,
}

/// Average refinement loss `(1/n) sum_i rho1(d_i / sigma)` at
/// `(beta, gamma)`.
pub fn objective_rn(
    data: &Dataset,
    structure: &CovStructure,
    rho1: &Biweight,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
    sigma: f64,
) -> Result<f64, EstimatorError> {
    let chol = shape_cholesky(structure, gamma)?;
    let d = distances(data, &chol, beta);
    Ok(d.iter().map(|di| rho1.rho(di / sigma)).sum::<f64>() / data.n() as f64)
}

/// Margin by which a sweep must not increase the objective before damping
/// kicks in (absolute, on the scale of an averaged bounded loss).
const ASCENT_MARGIN: f64 = 1e-14;

/// Runs the full three-stage fit: subset-search initial estimate, auxiliary
/// M-scale, refinement fixed point.
pub fn fit_mm(
    data: &Dataset,
    structure: &CovStructure,
    losses: &LossPair,
    config: &FitConfig,
) -> Result<FitResult, EstimatorError> {
    let init = initial_fit(data, structure, losses, config)?;
    // The auxiliary scale: M-scale of the initial distances. The subset
    // search already minimizes exactly this quantity, so for the built-in
    // initial stage this reproduces `init.sigma`; recomputing keeps the
    // stage honest for any other starting point.
    let chol = shape_cholesky(structure, &init.gamma)?;
    let sigma = crate::m_scale(
        &distances(data, &chol, &init.beta),
        &losses.rho0,
        losses.b0,
    )?;
    mm_refine(data, structure, losses, sigma, &init.beta, &init.gamma, config)
}

/// Refinement fixed point from an explicit starting point, with the scale
/// frozen at `sigma`.
pub fn mm_refine(
    data: &Dataset,
    structure: &CovStructure,
    losses: &LossPair,
    sigma: f64,
    beta_init: &DVector<f64>,
    gamma_init: &DVector<f64>,
    config: &FitConfig,
) -> Result<FitResult, EstimatorError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(EstimatorError::InvalidData {
            context: format!("auxiliary scale must be finite and positive, got {sigma}"),
        });
    }
    let rho1 = &losses.rho1;
    let mut beta = beta_init.clone();
    let mut gamma = gamma_init.clone();
    let mut objective = objective_rn(data, structure, rho1, &beta, &gamma, sigma)?;
    let mut score_norm = f64::INFINITY;
    let mut converged = false;
    let mut n_iter = 0;

    for sweep in 0..config.max_iter {
        n_iter = sweep;
        let chol = shape_cholesky(structure, &gamma)?;
        let d = distances(data, &chol, &beta);

        score_norm = score_on_unit_shape(data, structure, rho1, &beta, &gamma, &chol, &d, sigma)?;
        if score_norm <= config.score_tol {
            converged = true;
            break;
        }

        let (beta_full, gamma_full) =
            full_sweep_target(data, structure, rho1, &chol, &d, sigma)?;

        // Accept the full sweep if it descends; otherwise damp towards the
        // current iterate until it does.
        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..=config.halving_cap {
            let beta_t = &beta + (&beta_full - &beta) * t;
            let theta_t = &gamma + (&gamma_full - &gamma) * t;
            if let Ok((gamma_t, _)) = structure.normalize_direction(&theta_t) {
                let obj_t = objective_rn(data, structure, rho1, &beta_t, &gamma_t, sigma)?;
                if obj_t <= objective + ASCENT_MARGIN {
                    beta = beta_t;
                    gamma = gamma_t;
                    objective = obj_t;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // No descent direction left at this resolution; report the
            // current iterate with its score norm.
            break;
        }
    }

    let theta = &gamma * (sigma * sigma);
    Ok(FitResult {
        beta,
        gamma,
        sigma,
        theta,
        objective,
        score_norm,
        converged,
        n_iter,
        seed: config.seed,
    })
}

/// The undamped sweep target: exact solution of the regression score given
/// the current shape, then the exact solution of the shape score (in the
/// structure's coordinates, renormalized to unit determinant) given the new
/// residuals.
fn full_sweep_target(
    data: &Dataset,
    structure: &CovStructure,
    rho1: &Biweight,
    chol: &PdCholesky,
    d: &[f64],
    sigma: f64,
) -> Result<(DVector<f64>, DVector<f64>), EstimatorError> {
    let k = data.dim();
    let weights: Vec<f64> = d.iter().map(|di| rho1.u_weight(di / sigma)).collect();
    let v_total: f64 = d.iter().map(|di| rho1.v_weight(di / sigma)).sum();
    if v_total <= 0.0 {
        return Err(EstimatorError::AllWeightsZero { sigma });
    }

    let beta_new = weighted_gls(data, chol, &weights)?;

    // Weighted second-moment target for the shape:
    // M = k * sum_i w_i e_i e_i^T / (sigma^2 * sum_i v_i)
    let mut m = DMatrix::zeros(k, k);
    for i in 0..data.n() {
        if weights[i] == 0.0 {
            continue;
        }
        let e = data.y(i) - data.x(i) * &beta_new;
        m += &e * e.transpose() * weights[i];
    }
    m *= k as f64 / (sigma * sigma * v_total);

    // Shape score solved in structure coordinates: the Gram system
    //   [tr(B_j V^{-1} B_t V^{-1})] gamma~ = [tr(B_j V^{-1} M V^{-1})].
    let basis = structure.basis();
    let l = basis.len();
    let a: Vec<DMatrix<f64>> = basis.iter().map(|b| chol.solve_mat(b)).collect();
    let a_m = chol.solve_mat(&m);
    let mut gram = DMatrix::zeros(l, l);
    let mut rhs = DVector::zeros(l);
    for j in 0..l {
        rhs[j] = (&a[j] * &a_m).trace();
        for t in j..l {
            let g = (&a[j] * &a[t]).trace();
            gram[(j, t)] = g;
            gram[(t, j)] = g;
        }
    }
    let gamma_raw = PdCholesky::new(&gram)
        .map_err(|_| EstimatorError::RankDeficient {
            context: "shape Gram system is singular".into(),
        })?
        .solve_vec(&rhs);
    // Hand back the unit-determinant representative when the target is
    // positive definite, so damped steps interpolate between shapes of the
    // same size; a non-definite target is left raw and the damping loop's
    // own normalization deals with it.
    let gamma_new = match structure.normalize_direction(&gamma_raw) {
        Ok((g, _)) => g,
        Err(_) => gamma_raw,
    };
    Ok((beta_new, gamma_new))
}
