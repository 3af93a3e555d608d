//! Monte-Carlo check of the asymptotic covariance matrices.

use crate::config::{LawSpec, SimConfig};
use crate::generate::generate_dataset;
use crate::SimError;
use asymptotics::{asymptotic_covariance, compute_constants, VarianceTarget};
use loss_functions::consistency_b0;
use mm_estimators::{fit_mm, LossPair};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// Fewest replications for which comparing fourth-moment-level quantities
/// (sample covariances) to theory is meaningful.
const MIN_REPLICATIONS: usize = 200;

/// One fitted replication, flat enough for a long-format CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRecord {
    /// Replication index, which is also its RNG stream.
    pub rep: u64,
    /// Whether the fit returned an error instead of an estimate.
    pub failed: bool,
    /// The fit error's message, when there was one.
    pub error: Option<String>,
    /// Whether the refinement met its score tolerance.
    pub converged: bool,
    /// Refinement sweeps used.
    pub n_iter: usize,
    /// Auxiliary scale estimate (`NaN` on failure).
    pub sigma: f64,
    /// Coefficient estimate (empty on failure).
    pub beta: Vec<f64>,
    /// Shape estimate (empty on failure).
    pub gamma: Vec<f64>,
    /// Covariance-parameter estimate (empty on failure).
    pub theta: Vec<f64>,
}

/// One parameter block of the study: empirical versus theoretical
/// covariance of `sqrt(n) * (estimate - truth)`.
#[derive(Debug, Clone, Serialize)]
pub struct BlockComparison {
    /// Which block: `beta`, `gamma`, or `theta`.
    pub label: String,
    /// Sample covariance across replications, row-major.
    pub empirical: Vec<Vec<f64>>,
    /// Closed-form asymptotic covariance, row-major.
    pub theoretical: Vec<Vec<f64>>,
    /// `|empirical - theoretical|_F / |theoretical|_F`.
    pub relative_frobenius: f64,
}

/// Cross-covariance between the coefficient and shape estimates, which the
/// theory says vanishes. Each entry is compared to its own Monte-Carlo
/// standard error, so the pass band scales with the study size instead of
/// being hard-coded.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    /// Largest absolute cross-covariance entry.
    pub max_abs_entry: f64,
    /// Largest entry measured in its estimated standard errors.
    pub max_se_units: f64,
    /// True when every entry is within four standard errors of zero.
    pub within_four_se: bool,
}

/// Outcome of [`monte_carlo_variance`].
#[derive(Debug, Clone, Serialize)]
pub struct VarianceStudy {
    /// Master seed the study ran under.
    pub seed: u64,
    /// Units per replication.
    pub n: usize,
    /// Replications attempted.
    pub replications: usize,
    /// Replications whose fit returned an error (excluded from the
    /// covariances, reported rather than raised).
    pub failures: usize,
    /// Replications that hit the sweep cap without meeting the score
    /// tolerance (still included in the covariances).
    pub non_converged: usize,
    /// Coefficient block.
    pub beta: BlockComparison,
    /// Unit-determinant shape block.
    pub gamma: BlockComparison,
    /// Covariance-parameter block.
    pub theta: BlockComparison,
    /// Orthogonality check between coefficient and shape estimates.
    pub cross_beta_gamma: CrossCheck,
    /// Calibration and caveat notes recorded while running.
    pub notes: Vec<String>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn relative_frobenius(empirical: &DMatrix<f64>, theoretical: &DMatrix<f64>) -> f64 {
    (empirical - theoretical).norm() / theoretical.norm()
}

/// Sample covariance (denominator `R - 1`) of the rows of `draws`.
fn sample_covariance(draws: &[DVector<f64>]) -> DMatrix<f64> {
    let r = draws.len();
    let p = draws[0].len();
    let mut mean = DVector::zeros(p);
    for d in draws {
        mean += d;
    }
    mean /= r as f64;
    let mut cov = DMatrix::zeros(p, p);
    for d in draws {
        let c = d - &mean;
        cov.syger(1.0, &c, &c, 1.0);
    }
    // syger fills the lower triangle; mirror it.
    for i in 0..p {
        for j in (i + 1)..p {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    cov / (r as f64 - 1.0)
}

/// Sample cross-covariance between paired rows of `a` and `b`.
fn sample_cross_covariance(a: &[DVector<f64>], b: &[DVector<f64>]) -> DMatrix<f64> {
    let r = a.len();
    let (pa, pb) = (a[0].len(), b[0].len());
    let mut mean_a = DVector::zeros(pa);
    let mut mean_b = DVector::zeros(pb);
    for (da, db) in a.iter().zip(b) {
        mean_a += da;
        mean_b += db;
    }
    mean_a /= r as f64;
    mean_b /= r as f64;
    let mut cov = DMatrix::zeros(pa, pb);
    for (da, db) in a.iter().zip(b) {
        cov += (da - &mean_a) * (db - &mean_b).transpose();
    }
    cov / (r as f64 - 1.0)
}

/// Calibrates the scale stage to the configured error law so every block of
/// the estimate is consistent for the configured truth, and returns the loss
/// pair to fit with plus the radius scaling `c_sigma` the closed-form
/// constants must use. Normal laws keep the pair untouched (`c_sigma = 1`);
/// Student laws recalibrate `b0` under the Student radial law, with the
/// standardization factor folded in when draws are rescaled.
pub(crate) fn calibrate_to_law(
    cfg: &SimConfig,
    k: usize,
    pair: &LossPair,
    notes: &mut Vec<String>,
) -> Result<(LossPair, f64), SimError> {
    match cfg.law {
        LawSpec::Normal => Ok((*pair, 1.0)),
        LawSpec::Student { df } => {
            let c_sigma = if cfg.standardize_student {
                ((df - 2.0) / df).sqrt()
            } else {
                1.0
            };
            let law = cfg.law.radial(k)?;
            let b0 = consistency_b0(&law, &pair.rho0, c_sigma)?;
            notes.push(format!(
                "scale consistency constant recalibrated under student(df = {df}): b0 = {b0:.12}"
            ));
            if df <= 2.0 {
                notes.push(format!(
                    "student df = {df} has no finite residual covariance; only radial \
                     functionals are compared"
                ));
            }
            Ok((
                LossPair {
                    rho0: pair.rho0,
                    rho1: pair.rho1,
                    b0,
                },
                c_sigma,
            ))
        }
    }
}

/// Generates and fits every replication of `cfg`, one RNG stream per
/// replication, in parallel but in a scheduling-independent order. Fit
/// errors become records with `failed = true` instead of aborting the run.
pub fn run_replications(cfg: &SimConfig) -> Result<Vec<ReplicationRecord>, SimError> {
    let structure = cfg.validate()?;
    let k = structure.dim();
    let mut notes = Vec::new();
    let pair = cfg.tuning.resolve(k)?;
    let (pair, _) = calibrate_to_law(cfg, k, &pair, &mut notes)?;
    let fit_config = cfg.fit.build(cfg.seed);

    let records = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let data = match generate_dataset(cfg, &structure, rep) {
                Ok(d) => d,
                Err(e) => {
                    return ReplicationRecord {
                        rep,
                        failed: true,
                        error: Some(e.to_string()),
                        converged: false,
                        n_iter: 0,
                        sigma: f64::NAN,
                        beta: Vec::new(),
                        gamma: Vec::new(),
                        theta: Vec::new(),
                    }
                }
            };
            match fit_mm(&data, &structure, &pair, &fit_config) {
                Ok(fit) => ReplicationRecord {
                    rep,
                    failed: false,
                    error: None,
                    converged: fit.converged,
                    n_iter: fit.n_iter,
                    sigma: fit.sigma,
                    beta: fit.beta.iter().copied().collect(),
                    gamma: fit.gamma.iter().copied().collect(),
                    theta: fit.theta.iter().copied().collect(),
                },
                Err(e) => ReplicationRecord {
                    rep,
                    failed: true,
                    error: Some(e.to_string()),
                    converged: false,
                    n_iter: 0,
                    sigma: f64::NAN,
                    beta: Vec::new(),
                    gamma: Vec::new(),
                    theta: Vec::new(),
                },
            }
        })
        .collect();
    Ok(records)
}

/// Summarizes already-fitted replications against the closed-form theory.
pub fn variance_summary(
    cfg: &SimConfig,
    records: &[ReplicationRecord],
) -> Result<VarianceStudy, SimError> {
    let structure = cfg.validate()?;
    if records.len() != cfg.replications {
        return Err(SimError::InvalidConfig {
            context: format!(
                "config asks for {} replications but {} records were supplied",
                cfg.replications,
                records.len()
            ),
        });
    }
    let k = structure.dim();
    let mut notes = Vec::new();
    let pair = cfg.tuning.resolve(k)?;
    let (pair, c_sigma) = calibrate_to_law(cfg, k, &pair, &mut notes)?;

    // Truth for each block. The scale stage is calibrated to the law, so
    // theta's limit is the configured theta itself.
    let beta_star = cfg.beta_vector();
    let theta_star = cfg.theta_vector();
    let (gamma_star, _) = structure.normalize_direction(&theta_star)?;
    let sigma_star = structure.evaluate(&theta_star)?;
    let sigma_chol = matrix_kit::PdCholesky::new(&sigma_star)?;

    let mut failures = 0usize;
    let mut non_converged = 0usize;
    let sqrt_n = (cfg.n as f64).sqrt();
    let mut beta_draws = Vec::with_capacity(records.len());
    let mut gamma_draws = Vec::with_capacity(records.len());
    let mut theta_draws = Vec::with_capacity(records.len());
    for record in records {
        if record.failed {
            failures += 1;
            continue;
        }
        if !record.converged {
            non_converged += 1;
        }
        beta_draws.push((DVector::from_column_slice(&record.beta) - &beta_star) * sqrt_n);
        gamma_draws.push((DVector::from_column_slice(&record.gamma) - &gamma_star) * sqrt_n);
        theta_draws.push((DVector::from_column_slice(&record.theta) - &theta_star) * sqrt_n);
    }
    if beta_draws.len() < MIN_REPLICATIONS / 2 {
        return Err(SimError::InvalidConfig {
            context: format!(
                "only {} of {} replications produced a fit; the study is not informative",
                beta_draws.len(),
                records.len()
            ),
        });
    }
    if failures > 0 {
        notes.push(format!(
            "{failures} of {} replications failed to fit and were excluded",
            records.len()
        ));
    }

    // Theoretical covariances at the configured model. E[X' Sigma^{-1} X]
    // is exact under the identity design and otherwise estimated by pooling
    // every generated design matrix.
    let law = cfg.law.radial(k)?;
    let constants = compute_constants(&law, &pair.rho0, &pair.rho1, pair.b0, c_sigma)?;
    let exx = if matches!(cfg.design, crate::DesignSpec::Identity) {
        sigma_chol.inverse()
    } else {
        let mut pooled_exx = DMatrix::zeros(beta_star.len(), beta_star.len());
        let mut pooled = 0usize;
        for rep in 0..cfg.replications {
            let data = generate_dataset(cfg, &structure, rep as u64)?;
            for i in 0..data.n() {
                let solved = sigma_chol.solve_mat(data.x(i));
                pooled_exx += data.x(i).transpose() * solved;
                pooled += 1;
            }
        }
        pooled_exx / pooled as f64
    };

    let theory_beta = asymptotic_covariance(
        &structure,
        &theta_star,
        &constants,
        VarianceTarget::Beta,
        Some(&exx),
    )?;
    let theory_gamma =
        asymptotic_covariance(&structure, &theta_star, &constants, VarianceTarget::Gamma, None)?;
    let theory_theta =
        asymptotic_covariance(&structure, &theta_star, &constants, VarianceTarget::Theta, None)?;

    let emp_beta = sample_covariance(&beta_draws);
    let emp_gamma = sample_covariance(&gamma_draws);
    let emp_theta = sample_covariance(&theta_draws);

    // Cross block: every entry measured against its own standard error,
    // SE(C_ij)^2 ~ (S_ii T_jj + C_ij^2) / (R - 1).
    let cross = sample_cross_covariance(&beta_draws, &gamma_draws);
    let r_eff = beta_draws.len() as f64;
    let mut max_abs = 0.0f64;
    let mut max_se_units = 0.0f64;
    for i in 0..cross.nrows() {
        for j in 0..cross.ncols() {
            let c = cross[(i, j)];
            let se = ((emp_beta[(i, i)] * emp_gamma[(j, j)] + c * c) / (r_eff - 1.0)).sqrt();
            max_abs = max_abs.max(c.abs());
            if se > 0.0 {
                max_se_units = max_se_units.max(c.abs() / se);
            }
        }
    }

    Ok(VarianceStudy {
        seed: cfg.seed,
        n: cfg.n,
        replications: cfg.replications,
        failures,
        non_converged,
        beta: BlockComparison {
            label: "beta".into(),
            relative_frobenius: relative_frobenius(&emp_beta, &theory_beta),
            empirical: to_rows(&emp_beta),
            theoretical: to_rows(&theory_beta),
        },
        gamma: BlockComparison {
            label: "gamma".into(),
            relative_frobenius: relative_frobenius(&emp_gamma, &theory_gamma),
            empirical: to_rows(&emp_gamma),
            theoretical: to_rows(&theory_gamma),
        },
        theta: BlockComparison {
            label: "theta".into(),
            relative_frobenius: relative_frobenius(&emp_theta, &theory_theta),
            empirical: to_rows(&emp_theta),
            theoretical: to_rows(&theory_theta),
        },
        cross_beta_gamma: CrossCheck {
            max_abs_entry: max_abs,
            max_se_units,
            within_four_se: max_se_units <= 4.0,
        },
        notes,
    })
}

/// Runs the full study: generates `replications` datasets, fits each one,
/// and compares the empirical covariance of `sqrt(n) * (estimate - truth)`
/// with the closed-form asymptotic covariance, block by block.
///
/// Replication `r` draws from RNG stream `r`, so the study is reproducible
/// bit for bit at any thread count. Fit errors are counted and reported
/// instead of aborting the study; the affected replications are excluded
/// from the covariances. Composes [`run_replications`] and
/// [`variance_summary`]; call those separately to keep the per-replication
/// records.
pub fn monte_carlo_variance(cfg: &SimConfig) -> Result<VarianceStudy, SimError> {
    if cfg.replications < MIN_REPLICATIONS {
        return Err(SimError::InvalidConfig {
            context: format!(
                "variance studies need at least {MIN_REPLICATIONS} replications, got {}",
                cfg.replications
            ),
        });
    }
    if cfg.contamination.is_some() {
        return Err(SimError::InvalidConfig {
            context: "variance studies compare against clean-model theory; \
                      drop the contamination block"
                .into(),
        });
    }
    let records = run_replications(cfg)?;
    variance_summary(cfg, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sample_covariance_matches_a_hand_example() {
        let draws = vec![
            DVector::from_column_slice(&[1.0, 2.0]),
            DVector::from_column_slice(&[3.0, 0.0]),
            DVector::from_column_slice(&[5.0, 4.0]),
        ];
        let cov = sample_covariance(&draws);
        assert_relative_eq!(cov[(0, 0)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(cov[(1, 1)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 1)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 1)], cov[(1, 0)], epsilon = 1e-15);
    }

    #[test]
    fn cross_covariance_of_independent_streams_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<DVector<f64>> = (0..4000)
            .map(|_| {
                DVector::from_fn(2, |_, _| {
                    rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
                })
            })
            .collect();
        let b: Vec<DVector<f64>> = (0..4000)
            .map(|_| {
                DVector::from_fn(3, |_, _| {
                    rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
                })
            })
            .collect();
        let cross = sample_cross_covariance(&a, &b);
        assert!(cross.amax() < 4.0 / (4000.0f64).sqrt());
    }
}
