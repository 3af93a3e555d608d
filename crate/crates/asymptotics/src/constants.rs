//! The scalar constants that determine first-order behavior of the
//! MM-estimators at an elliptical model: score curvatures, variance
//! multipliers, and gross-error-sensitivity indices, all computed by
//! quadrature against the radial law.

use std::collections::HashMap;
use std::sync::RwLock;

use loss_functions::{check_nesting, consistency_b0, tune_cutoff, Biweight, RadialLaw};
use serde::Serialize;

use crate::AsymptoticsError;

/// Scalar constants of the estimator at a given reference law and tuning.
///
/// All expectations run over the radial distribution `R` of the law, with
/// the loss arguments scaled by `c_sigma` (the ratio between the model's
/// intrinsic scale and the limit of the auxiliary M-scale; it is 1 whenever
/// the consistency constant `b0` is calibrated at the same law).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    /// Block dimension of the model.
    pub k: usize,
    /// Cutoff of the scale loss.
    pub c0: f64,
    /// Cutoff of the efficiency loss.
    pub c1: f64,
    /// Consistency constant of the M-scale.
    pub b0: f64,
    /// Scale ratio at which the losses are evaluated.
    pub c_sigma: f64,
    /// Mean curvature of the regression score,
    /// `E[(1-1/k) rho1'(s)/s + (1/k) rho1''(s)]` at `s = c_sigma R`.
    pub alpha1: f64,
    /// Curvature of the shape score,
    /// `E[rho1''(s) s^2 + (k+1) rho1'(s) s] / (k+2)`.
    pub gamma1: f64,
    /// Variance multiplier of the regression component relative to the
    /// Gaussian maximum-likelihood fit, `E[rho1'(s)^2] / (k alpha1^2)`.
    pub lambda: f64,
    /// Variance multiplier of the shape component,
    /// `k E[rho1'(s)^2 s^2] / ((k+2) gamma1^2)`.
    pub sigma1: f64,
    /// Variance coefficient of the size direction of the covariance
    /// estimate: the derived combination `-2 sigma1/(k c_sigma^2) + sigma3`.
    pub sigma2: f64,
    /// Variance multiplier of the auxiliary scale,
    /// `4 E[(rho0(s)-b0)^2] / E[rho0'(s) s]^2`.
    pub sigma3: f64,
    /// Gross-error-sensitivity index of the regression component,
    /// `sup|rho1'| / alpha1`.
    pub g1: f64,
    /// Gross-error-sensitivity index of the shape component,
    /// `k sup|rho1'(s) s| / ((k+2) gamma1)`.
    pub g2: f64,
    /// Mean derivative response of the scale equation, `E[rho0'(s) s]`;
    /// the denominator shared by scale-related influence terms.
    pub scale_slope: f64,
}

/// Cache key: the constants depend only on the law, the two cutoffs, the
/// consistency constant, and the scale ratio. Floats are keyed by their
/// bit patterns, which is exact for reproducible inputs.
#[derive(PartialEq, Eq, Hash, Clone, Copy)]
struct CacheKey {
    law_kind: u8,
    dim: usize,
    df_bits: u64,
    c0_bits: u64,
    c1_bits: u64,
    b0_bits: u64,
    c_sigma_bits: u64,
}

impl CacheKey {
    fn new(law: &RadialLaw, c0: f64, c1: f64, b0: f64, c_sigma: f64) -> Self {
        let (law_kind, dim, df_bits) = match law {
            RadialLaw::Normal { dim } => (0u8, *dim, 0u64),
            RadialLaw::Student { dim, df } => (1u8, *dim, df.to_bits()),
        };
        CacheKey {
            law_kind,
            dim,
            df_bits,
            c0_bits: c0.to_bits(),
            c1_bits: c1.to_bits(),
            b0_bits: b0.to_bits(),
            c_sigma_bits: c_sigma.to_bits(),
        }
    }
}

/// Read-mostly cache of computed constants. Quadrature is deterministic, so
/// concurrent writes of the same key are idempotent.
static CACHE: RwLock<Option<HashMap<CacheKey, AsymptoticConstants>>> = RwLock::new(None);

fn cache_lookup(key: &CacheKey) -> Option<AsymptoticConstants> {
    CACHE
        .read()
        .ok()
        .and_then(|guard| guard.as_ref().and_then(|map| map.get(key).copied()))
}

fn cache_insert(key: CacheKey, value: AsymptoticConstants) {
    if let Ok(mut guard) = CACHE.write() {
        guard.get_or_insert_with(HashMap::new).insert(key, value);
    }
}

/// Computes every constant in [`AsymptoticConstants`] for a nested loss
/// pair under `law`.
///
/// `b0` is the consistency constant of the M-scale; pass the value
/// calibrated at `law` (then `c_sigma = 1`) or at a different law together
/// with the scale ratio `c_sigma` that calibration induces.
///
/// Results are cached per (law, cutoffs, `b0`, `c_sigma`); repeated calls
/// return the identical value without re-integrating.
pub fn compute_constants(
    law: &RadialLaw,
    rho0: &Biweight,
    rho1: &Biweight,
    b0: f64,
    c_sigma: f64,
) -> Result<AsymptoticConstants, AsymptoticsError> {
    check_nesting(rho0, rho1)?;
    if !(c_sigma.is_finite() && c_sigma > 0.0) {
        return Err(AsymptoticsError::InvalidParameter {
            context: format!("scale ratio c_sigma must be positive and finite, got {c_sigma}"),
        });
    }
    if !(b0.is_finite() && b0 > 0.0 && b0 < rho0.sup_rho()) {
        return Err(AsymptoticsError::InvalidParameter {
            context: format!(
                "consistency constant b0 must lie in (0, sup rho0) = (0, {}), got {b0}",
                rho0.sup_rho()
            ),
        });
    }

    let key = CacheKey::new(law, rho0.cutoff(), rho1.cutoff(), b0, c_sigma);
    if let Some(hit) = cache_lookup(&key) {
        return Ok(hit);
    }

    let k = law.dim() as f64;
    // Radii past `cutoff / c_sigma` contribute nothing to integrands built
    // from the loss derivatives (they vanish identically there), and a
    // closed-form constant to the scale deviation.
    let r0_support = rho0.cutoff() / c_sigma;
    let r1_support = rho1.cutoff() / c_sigma;

    let alpha1 = law.expect_bounded_tail(
        |r| {
            let s = c_sigma * r;
            (1.0 - 1.0 / k) * rho1.u_weight(s) + rho1.ddrho(s) / k
        },
        r1_support,
        0.0,
    )?;
    let gamma1 = law.expect_bounded_tail(
        |r| {
            let s = c_sigma * r;
            rho1.ddrho(s) * s * s + (k + 1.0) * rho1.drho(s) * s
        },
        r1_support,
        0.0,
    )? / (k + 2.0);
    if !(gamma1 > 0.0) {
        return Err(AsymptoticsError::NonPositiveGamma1 { gamma1 });
    }
    if !(alpha1 > 0.0) {
        return Err(AsymptoticsError::InvalidParameter {
            context: format!(
                "regression curvature alpha1 = {alpha1} is not positive at cutoff {}",
                rho1.cutoff()
            ),
        });
    }

    let e_drho_sq =
        law.expect_bounded_tail(|r| rho1.drho(c_sigma * r).powi(2), r1_support, 0.0)?;
    let lambda = e_drho_sq / (k * alpha1 * alpha1);

    let e_drho_r_sq = law.expect_bounded_tail(
        |r| {
            let s = c_sigma * r;
            (rho1.drho(s) * s).powi(2)
        },
        r1_support,
        0.0,
    )?;
    let sigma1 = k * e_drho_r_sq / ((k + 2.0) * gamma1 * gamma1);

    let scale_slope = law.expect_bounded_tail(
        |r| {
            let s = c_sigma * r;
            rho0.drho(s) * s
        },
        r0_support,
        0.0,
    )?;
    let e_scale_dev_sq = law.expect_bounded_tail(
        |r| (rho0.rho(c_sigma * r) - b0).powi(2),
        r0_support,
        (rho0.sup_rho() - b0).powi(2),
    )?;
    let sigma3 = 4.0 * e_scale_dev_sq / (scale_slope * scale_slope);
    let sigma2 = -2.0 * sigma1 / (k * c_sigma * c_sigma) + sigma3;

    let g1 = rho1.sup_drho() / alpha1;
    let g2 = k * rho1.sup_v_weight() / ((k + 2.0) * gamma1);

    let out = AsymptoticConstants {
        k: law.dim(),
        c0: rho0.cutoff(),
        c1: rho1.cutoff(),
        b0,
        c_sigma,
        alpha1,
        gamma1,
        lambda,
        sigma1,
        sigma2,
        sigma3,
        g1,
        g2,
        scale_slope,
    };
    cache_insert(key, out);
    Ok(out)
}

/// Convenience entry point for the Gaussian reference model: tunes nothing,
/// calibrates `b0 = E[rho0(R)]` under the normal radial law (so the scale is
/// consistent there and `c_sigma = 1`), and computes the constants.
pub fn normal_constants(k: usize, c0: f64, c1: f64) -> Result<AsymptoticConstants, AsymptoticsError> {
    let law = RadialLaw::normal(k)?;
    let rho0 = Biweight::new(c0)?;
    let rho1 = Biweight::new(c1)?;
    let b0 = consistency_b0(&law, &rho0, 1.0)?;
    compute_constants(&law, &rho0, &rho1, b0, 1.0)
}

/// The scale cutoff attaining a target breakdown fraction under the normal
/// law in dimension `k`, re-exported here so callers of this crate do not
/// need the loss crate for the common tuning step.
pub fn breakdown_tuned_cutoff(k: usize, target: f64) -> Result<f64, AsymptoticsError> {
    let law = RadialLaw::normal(k)?;
    Ok(tune_cutoff(&law, target)?.c)
}
