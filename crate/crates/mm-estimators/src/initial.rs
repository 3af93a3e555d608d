//! High-breakdown initial fit by randomized elemental-subset search.
//!
//! Candidate starts come from least-squares fits on minimal subsets of
//! units; each candidate is improved by a fixed number of concentration
//! steps (reweighted least squares plus a reweighted scatter projected onto
//! the covariance structure), then candidates compete on the M-scale of
//! their Mahalanobis distances. The best few are concentrated to
//! convergence and the overall scale minimizer wins.
//!
//! Everything is deterministic for a given seed: subsets are drawn up front
//! from a seeded generator, candidates are processed in index order, and
//! ties resolve to the lower index. Parallelism only distributes the
//! per-candidate work, never reorders it.

use crate::refine::FitConfig;
use crate::{m_scale, Dataset, EstimatorError, LossPair};
use cov_structures::CovStructure;
use matrix_kit::{mahalanobis_with, PdCholesky};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Result of the initial stage: a regression vector, a unit-determinant
/// shape direction, and the M-scale of the distances they produce.
#[derive(Debug, Clone)]
pub struct InitialFit {
    /// Regression coefficients.
    pub beta: DVector<f64>,
    /// Shape direction with `|V(gamma)| = 1`.
    pub gamma: DVector<f64>,
    /// M-scale of the Mahalanobis distances at `(beta, gamma)`.
    pub sigma: f64,
    /// Covariance parameters with `V(theta) = sigma^2 V(gamma)`.
    pub theta: DVector<f64>,
}

/// Number of units in one elemental subset: enough stacked rows for the
/// least-squares start, with a margin so generic subsets are full rank.
fn subset_size(dim: usize, n_coef: usize) -> usize {
    n_coef.max(n_coef.div_ceil(dim) + 1)
}

/// Relative singular-value threshold below which a stacked subset design is
/// treated as rank deficient and the subset is discarded.
const SUBSET_RANK_RTOL: f64 = 1e-10;

/// Convergence tolerance (relative change of the scale) for finalist
/// concentration.
const FINALIST_SCALE_RTOL: f64 = 1e-10;
/// Iteration cap for finalist concentration.
const FINALIST_MAX_STEPS: usize = 60;

pub(crate) struct Candidate {
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub sigma: f64,
}

/// Runs the subset search and returns the scale-minimizing initial fit.
pub fn initial_fit(
    data: &Dataset,
    structure: &CovStructure,
    losses: &LossPair,
    config: &FitConfig,
) -> Result<InitialFit, EstimatorError> {
    if structure.dim() != data.dim() {
        return Err(EstimatorError::InvalidData {
            context: format!(
                "structure dimension {} does not match data dimension {}",
                structure.dim(),
                data.dim()
            ),
        });
    }
    let m = subset_size(data.dim(), data.n_coef());
    if data.n() < m.max(2) {
        return Err(EstimatorError::TooFewObservations {
            needed: m.max(2),
            got: data.n(),
        });
    }

    // Subsets are drawn sequentially so the stream of random numbers (and
    // therefore the whole fit) is a pure function of the seed.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let subsets: Vec<Vec<usize>> = (0..config.n_subsets)
        .map(|_| rand::seq::index::sample(&mut rng, data.n(), m).into_vec())
        .collect();

    let mut candidates: Vec<Candidate> = subsets
        .par_iter()
        .map(|subset| {
            let (beta, gamma) = candidate_from_subset(data, structure, subset)?;
            concentrate(data, structure, losses, beta, gamma, config.concentration_steps).ok()
        })
        .collect::<Vec<Option<Candidate>>>()
        .into_iter()
        .flatten()
        .collect();
    if candidates.is_empty() {
        return Err(EstimatorError::SingularSubsets {
            attempts: config.n_subsets,
        });
    }

    // stable sort: equal scales keep subset order, so the winner is
    // reproducible even under exact ties
    candidates.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    candidates.truncate(config.n_finalists.max(1));

    let finalists: Vec<Candidate> = candidates
        .into_par_iter()
        .map(|c| concentrate_to_convergence(data, structure, losses, c))
        .collect::<Vec<Candidate>>();

    let best = finalists
        .into_iter()
        .min_by(|a, b| a.sigma.total_cmp(&b.sigma))
        .expect("at least one finalist exists");

    let theta = &best.gamma * (best.sigma * best.sigma);
    Ok(InitialFit {
        beta: best.beta,
        gamma: best.gamma,
        sigma: best.sigma,
        theta,
    })
}

/// Least-squares start from one subset: stacked LS for `beta`, residual
/// scatter projected onto the structure for the shape. Returns `None` when
/// the stacked design is rank deficient or no positive definite shape can
/// be formed.
fn candidate_from_subset(
    data: &Dataset,
    structure: &CovStructure,
    subset: &[usize],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let (k, q, m) = (data.dim(), data.n_coef(), subset.len());
    let mut xs = DMatrix::zeros(m * k, q);
    let mut ys = DVector::zeros(m * k);
    for (slot, &i) in subset.iter().enumerate() {
        xs.rows_mut(slot * k, k).copy_from(data.x(i));
        ys.rows_mut(slot * k, k).copy_from(data.y(i));
    }

    let svd = xs.svd(true, true);
    let s_max = svd.singular_values.max();
    if svd.singular_values.min() <= SUBSET_RANK_RTOL * s_max || s_max == 0.0 {
        return None;
    }
    let beta = svd.solve(&ys, 0.0).ok()?;

    let mut scatter = DMatrix::zeros(k, k);
    for &i in subset {
        let e = data.y(i) - data.x(i) * &beta;
        scatter += &e * e.transpose();
    }
    scatter /= m as f64;

    let gamma = pd_direction(structure, &scatter)?;
    Some((beta, gamma))
}

/// Projects a scatter matrix onto the structure and returns the
/// unit-determinant direction, blending towards the isotropic member of the
/// span when the raw projection is not positive definite.
fn pd_direction(structure: &CovStructure, scatter: &DMatrix<f64>) -> Option<DVector<f64>> {
    let k = structure.dim();
    let trace = scatter.trace();
    let iso = DMatrix::<f64>::identity(k, k) * if trace > 0.0 { trace / k as f64 } else { 1.0 };
    let theta_raw = structure.project(scatter).ok()?;
    let theta_iso = structure.project(&iso).ok()?;
    for &alpha in &[1.0, 0.7, 0.4, 0.2, 0.1, 0.05, 0.0] {
        let theta = &theta_raw * alpha + &theta_iso * (1.0 - alpha);
        if let Ok((gamma, _scale)) = structure.normalize_direction(&theta) {
            return Some(gamma);
        }
    }
    None
}

/// Weighted generalized least squares:
/// `beta = (sum_i w_i X_i^T V^{-1} X_i)^{-1} sum_i w_i X_i^T V^{-1} y_i`.
pub(crate) fn weighted_gls(
    data: &Dataset,
    chol: &PdCholesky,
    weights: &[f64],
) -> Result<DVector<f64>, EstimatorError> {
    let q = data.n_coef();
    let mut lhs = DMatrix::zeros(q, q);
    let mut rhs = DVector::zeros(q);
    for i in 0..data.n() {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        let vx = chol.solve_mat(data.x(i));
        lhs += data.x(i).transpose() * &vx * w;
        rhs += vx.transpose() * data.y(i) * w;
    }
    let f = PdCholesky::new(&lhs).map_err(|_| EstimatorError::RankDeficient {
        context: "weighted normal equations are singular".into(),
    })?;
    Ok(f.solve_vec(&rhs))
}

/// Mahalanobis distances of all units at `(beta, shape)`.
pub(crate) fn distances(
    data: &Dataset,
    chol: &PdCholesky,
    beta: &DVector<f64>,
) -> Vec<f64> {
    (0..data.n())
        .map(|i| {
            let fitted = data.x(i) * beta;
            mahalanobis_with(data.y(i), &fitted, chol)
        })
        .collect()
}

/// Runs `steps` concentration steps from `(beta, gamma)` and returns the
/// improved candidate with its final scale.
fn concentrate(
    data: &Dataset,
    structure: &CovStructure,
    losses: &LossPair,
    mut beta: DVector<f64>,
    mut gamma: DVector<f64>,
    steps: usize,
) -> Result<Candidate, EstimatorError> {
    for _ in 0..steps {
        (beta, gamma) = concentrate_once(data, structure, losses, &beta, &gamma)?;
    }
    let chol = shape_cholesky(structure, &gamma)?;
    let sigma = m_scale(&distances(data, &chol, &beta), &losses.rho0, losses.b0)?;
    Ok(Candidate { beta, gamma, sigma })
}

/// One concentration step: M-scale of current distances, hard reweighting
/// by the scale-stage weight, weighted GLS for `beta`, reweighted scatter
/// projected onto the structure for the shape.
fn concentrate_once(
    data: &Dataset,
    structure: &CovStructure,
    losses: &LossPair,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), EstimatorError> {
    let k = data.dim();
    let chol = shape_cholesky(structure, gamma)?;
    let d = distances(data, &chol, beta);
    let sigma = m_scale(&d, &losses.rho0, losses.b0)?;

    let weights: Vec<f64> = d.iter().map(|di| losses.rho0.u_weight(di / sigma)).collect();
    let w_total: f64 = weights.iter().sum();
    if w_total <= 0.0 {
        return Err(EstimatorError::AllWeightsZero { sigma });
    }

    let beta_new = weighted_gls(data, &chol, &weights)?;

    let mut scatter = DMatrix::zeros(k, k);
    for i in 0..data.n() {
        if weights[i] == 0.0 {
            continue;
        }
        let e = data.y(i) - data.x(i) * &beta_new;
        scatter += &e * e.transpose() * weights[i];
    }
    scatter /= w_total;

    let gamma_new = pd_direction(structure, &scatter).ok_or_else(|| {
        EstimatorError::RankDeficient {
            context: "reweighted scatter projects to a non-positive-definite shape".into(),
        }
    })?;
    Ok((beta_new, gamma_new))
}

/// Concentrates a finalist until its scale stabilizes.
fn concentrate_to_convergence(
    data: &Dataset,
    structure: &CovStructure,
    losses: &LossPair,
    mut current: Candidate,
) -> Candidate {
    for _ in 0..FINALIST_MAX_STEPS {
        let next = match concentrate(
            data,
            structure,
            losses,
            current.beta.clone(),
            current.gamma.clone(),
            1,
        ) {
            Ok(c) => c,
            // a failed step cannot improve the scale; keep what we have
            Err(_) => return current,
        };
        let improved = next.sigma < current.sigma * (1.0 - FINALIST_SCALE_RTOL);
        let moved = (next.sigma - current.sigma).abs() > FINALIST_SCALE_RTOL * current.sigma;
        current = if next.sigma <= current.sigma { next } else { current };
        if !(improved && moved) {
            break;
        }
    }
    current
}

pub(crate) fn shape_cholesky(
    structure: &CovStructure,
    gamma: &DVector<f64>,
) -> Result<PdCholesky, EstimatorError> {
    let v = structure.evaluate(gamma)?;
    Ok(PdCholesky::new(&v)?)
}
