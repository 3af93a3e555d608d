//! Adversarial stress testing of the fit against its breakdown bound.

use crate::SimError;
use asymptotics::{breakdown_bound, kappa_general_position};
use mm_estimators::{fit_mm, Dataset, FitConfig, LossPair};
use nalgebra::DVector;
use serde::Serialize;

/// How contaminated units are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackPattern {
    /// Responses moved far away along a fixed direction, which pressures
    /// the coefficients and the scale upward.
    Explosion,
    /// Responses collapsed onto a single repeated point, which pressures
    /// the scatter toward singularity.
    Implosion,
}

/// Options for [`empirical_breakdown`].
#[derive(Debug, Clone)]
pub struct BreakdownOptions {
    /// Displacement distances tried for the explosion pattern.
    pub distances: Vec<f64>,
    /// Largest contaminated fraction probed.
    pub max_fraction: f64,
    /// A fit counts as diverged when its coefficient norm or its largest
    /// scatter eigenvalue grows by this factor relative to the clean fit.
    pub divergence_factor: f64,
    /// Collapse threshold for the smallest scatter eigenvalue, as a factor
    /// below the clean fit's. Duplicate point masses below the breakdown
    /// fraction legitimately squeeze the scatter by several orders of
    /// magnitude while the scale stays bounded away from zero (bounded
    /// absorption); true implosion drives the eigenvalue toward zero and
    /// typically ends in a singular-fit error, so this factor is set far
    /// below the absorption range.
    pub collapse_factor: f64,
    /// General-position constant of the clean sample; defaults to `k` when
    /// all units share one design matrix and `k + q` otherwise.
    pub kappa: Option<usize>,
    /// Breakdown fraction of the initial stage, for the theoretical bound.
    /// The built-in subset search minimizes the same M-scale as the rest of
    /// the pipeline, so its own term never binds below the scale terms;
    /// the default of 1 leaves the bound to those terms.
    pub eps_initial: f64,
}

impl Default for BreakdownOptions {
    fn default() -> Self {
        Self {
            distances: vec![1e2, 1e4, 1e6, 1e8],
            max_fraction: 0.5,
            divergence_factor: 1e3,
            collapse_factor: 1e8,
            kappa: None,
            eps_initial: 1.0,
        }
    }
}

/// One contaminated refit.
#[derive(Debug, Clone, Serialize)]
pub struct BreakdownProbe {
    /// Units replaced.
    pub m: usize,
    /// Contaminated fraction `m / n`.
    pub fraction: f64,
    /// Placement used.
    pub pattern: AttackPattern,
    /// Displacement distance (zero for the implosion pattern).
    pub distance: f64,
    /// Coefficient norm of the contaminated fit, `NaN` when it failed.
    pub beta_norm: f64,
    /// Largest eigenvalue of the fitted covariance, `NaN` when it failed.
    pub eig_max: f64,
    /// Smallest eigenvalue of the fitted covariance, `NaN` when it failed.
    pub eig_min: f64,
    /// Whether the fit refused to produce a result at all.
    pub fit_failed: bool,
    /// Whether this probe counts as divergence.
    pub diverged: bool,
}

/// First divergence found, if any.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceRecord {
    pub fraction: f64,
    pub pattern: AttackPattern,
    pub distance: f64,
}

/// Outcome of [`empirical_breakdown`].
#[derive(Debug, Clone, Serialize)]
pub struct BreakdownExperiment {
    /// Clean sample size.
    pub n: usize,
    /// General-position constant used for the bound.
    pub kappa: usize,
    /// Breakdown tuning of the scale stage.
    pub r0: f64,
    /// Finite-sample lower bound on the breakdown fraction.
    pub bound: f64,
    /// Smallest fraction at which any probe diverged; `None` when the fit
    /// survived every probe up to `max_fraction`.
    pub diverged_fraction: Option<f64>,
    /// Pattern and distance of the first divergence.
    pub first_divergence: Option<DivergenceRecord>,
    /// Every probe run, in order.
    pub probes: Vec<BreakdownProbe>,
    /// Clean-fit reference statistics the divergence test is relative to.
    pub clean_beta_norm: f64,
    pub clean_eig_max: f64,
    pub clean_eig_min: f64,
}

fn scatter_eigen_range(
    structure: &cov_structures::CovStructure,
    theta: &DVector<f64>,
) -> Result<(f64, f64), SimError> {
    let v = structure.evaluate(theta)?;
    let eigs = v.symmetric_eigenvalues();
    Ok((eigs.min(), eigs.max()))
}

/// Replaces the first `m` responses of `data` according to `pattern`.
fn attacked_copy(
    data: &Dataset,
    m: usize,
    pattern: AttackPattern,
    distance: f64,
    implosion_point: &DVector<f64>,
) -> Result<Dataset, SimError> {
    let k = data.dim();
    let direction = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    let mut ys = Vec::with_capacity(data.n());
    let mut xs = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let y = if i < m {
            match pattern {
                AttackPattern::Explosion => &direction * distance,
                AttackPattern::Implosion => implosion_point.clone(),
            }
        } else {
            data.y(i).clone()
        };
        ys.push(y);
        xs.push(data.x(i).clone());
    }
    Ok(Dataset::new(ys, xs)?)
}

/// Attacks `data` with point masses of growing size and reports the
/// smallest contaminated fraction that makes the fit diverge, next to the
/// finite-sample lower bound for the same tuning.
///
/// For each `m = 1, 2, ...` up to `max_fraction * n`, the first `m`
/// responses are replaced by an explosion placement at each configured
/// distance and by an implosion placement (all `m` responses equal to the
/// clean response mean). Breakdown means the estimate escapes every bound
/// as the placement moves out, so explosion placements count as divergence
/// only at the ladder's largest distance, where a fit that tracks the
/// contamination and one that rejects it differ by many orders of
/// magnitude; the smaller distances are recorded to expose bounded
/// absorption, which is not breakdown. A probe diverges when the refit
/// fails outright, when its coefficient norm exceeds `divergence_factor *
/// (1 + clean norm)`, or when a fitted-covariance eigenvalue leaves the
/// clean range by `divergence_factor` in either direction. The search
/// stops at the first diverging fraction.
pub fn empirical_breakdown(
    data: &Dataset,
    structure: &cov_structures::CovStructure,
    losses: &LossPair,
    config: &FitConfig,
    options: &BreakdownOptions,
) -> Result<BreakdownExperiment, SimError> {
    if !(options.max_fraction > 0.0 && options.max_fraction <= 0.5) {
        return Err(SimError::InvalidConfig {
            context: format!(
                "max_fraction must lie in (0, 0.5], got {}",
                options.max_fraction
            ),
        });
    }
    if options.distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(SimError::InvalidConfig {
            context: "attack distances must be finite and positive".into(),
        });
    }
    let n = data.n();
    let k = data.dim();
    let kappa = options.kappa.unwrap_or_else(|| {
        let common = (1..n).all(|i| data.x(i) == data.x(0));
        if common {
            kappa_general_position(k, 0)
        } else {
            kappa_general_position(k, data.n_coef())
        }
    });
    let r0 = losses.breakdown();
    let bound = breakdown_bound(n, r0, kappa, options.eps_initial)?;

    let clean = fit_mm(data, structure, losses, config)?;
    let clean_beta_norm = clean.beta.norm();
    let (clean_eig_min, clean_eig_max) = scatter_eigen_range(structure, &clean.theta)?;
    let implosion_point = {
        let mut mean = DVector::zeros(k);
        for i in 0..n {
            mean += data.y(i);
        }
        mean / n as f64
    };

    let factor = options.divergence_factor;
    let beta_limit = factor * (1.0 + clean_beta_norm);
    let eig_upper = factor * clean_eig_max;
    let eig_lower = clean_eig_min / factor;
    let max_distance = options
        .distances
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let m_max = (options.max_fraction * n as f64).floor() as usize;
    let mut probes = Vec::new();
    let mut diverged_fraction = None;
    let mut first_divergence = None;

    'outer: for m in 1..=m_max {
        let fraction = m as f64 / n as f64;
        let mut placements: Vec<(AttackPattern, f64)> = options
            .distances
            .iter()
            .map(|&d| (AttackPattern::Explosion, d))
            .collect();
        placements.push((AttackPattern::Implosion, 0.0));

        for (pattern, distance) in placements {
            let attacked = attacked_copy(data, m, pattern, distance, &implosion_point)?;
            let probe = match fit_mm(&attacked, structure, losses, config) {
                Ok(fit) => {
                    let (eig_min, eig_max) = scatter_eigen_range(structure, &fit.theta)?;
                    let beta_norm = fit.beta.norm();
                    let escaped = beta_norm > beta_limit
                        || eig_max > eig_upper
                        || eig_min < eig_lower;
                    // Explosion placements certify breakdown only at the
                    // far end of the ladder; a large fit at a nearer
                    // distance is bounded absorption.
                    let counts = match pattern {
                        AttackPattern::Explosion => distance == max_distance,
                        AttackPattern::Implosion => true,
                    };
                    let diverged = escaped && counts;
                    BreakdownProbe {
                        m,
                        fraction,
                        pattern,
                        distance,
                        beta_norm,
                        eig_max,
                        eig_min,
                        fit_failed: false,
                        diverged,
                    }
                }
                // A refusal to fit (degenerate scale, singular scatter) is
                // the implosion endpoint: count it as divergence.
                Err(_) => BreakdownProbe {
                    m,
                    fraction,
                    pattern,
                    distance,
                    beta_norm: f64::NAN,
                    eig_max: f64::NAN,
                    eig_min: f64::NAN,
                    fit_failed: true,
                    diverged: true,
                },
            };
            let diverged = probe.diverged;
            probes.push(probe);
            if diverged {
                diverged_fraction = Some(fraction);
                first_divergence = Some(DivergenceRecord {
                    fraction,
                    pattern,
                    distance,
                });
                break 'outer;
            }
        }
    }

    Ok(BreakdownExperiment {
        n,
        kappa,
        r0,
        bound: bound.bound,
        diverged_fraction,
        first_divergence,
        probes,
        clean_beta_norm,
        clean_eig_max,
        clean_eig_min,
    })
}
