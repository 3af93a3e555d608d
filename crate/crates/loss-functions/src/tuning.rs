//! Consistency constants and cutoff tuning for bounded losses.
//!
//! A scale estimate built from a bounded loss `rho` is calibrated by the
//! constant `b = E[rho(R)]` taken under a reference radial law; the ratio
//! `b / sup rho` is the breakdown fraction the resulting scale can absorb.
//! [`tune_cutoff`] inverts that relation: given a target breakdown fraction
//! it solves for the cutoff `c` such that the calibrated loss attains it.

use crate::biweight::Biweight;
use crate::law::RadialLaw;
use crate::solve::find_root_bracketed;
use crate::LossError;

/// Consistency constant `E[rho(c_scale * R)]` of `loss` under `law`.
///
/// `c_scale` rescales the radius before the loss is applied; pass 1 to
/// calibrate at the law itself.
pub fn consistency_b0(law: &RadialLaw, loss: &Biweight, c_scale: f64) -> Result<f64, LossError> {
    if !(c_scale.is_finite() && c_scale > 0.0) {
        return Err(LossError::InvalidParameter {
            context: format!("radius scale must be finite and positive, got {c_scale}"),
        });
    }
    law.expect_bounded_tail(
        |r| loss.rho(c_scale * r),
        loss.cutoff() / c_scale,
        loss.sup_rho(),
    )
}

/// A loss cutoff solved for a target breakdown fraction, together with the
/// consistency constant it induces.
#[derive(Debug, Clone, Copy)]
pub struct TunedLoss {
    /// The solved cutoff.
    pub c: f64,
    /// Consistency constant `E[rho(R)]` at that cutoff.
    pub b0: f64,
    /// The attained breakdown fraction `b0 / sup rho` (equals the request
    /// up to solver tolerance).
    pub breakdown: f64,
}

/// Search bracket for the cutoff. The lower end makes the standardized loss
/// saturate almost surely (ratio near 1); at the upper end the ratio is tiny
/// for any dimension this crate is used with.
const CUTOFF_BRACKET: (f64, f64) = (0.05, 60.0);

/// Solves for the biweight cutoff whose calibrated loss attains
/// `target_breakdown = E[rho(R)] / sup rho` under `law`.
///
/// The ratio decreases continuously from near 1 (cutoff near zero) towards 0
/// (cutoff large), so the root is unique and bracketable.
pub fn tune_cutoff(law: &RadialLaw, target_breakdown: f64) -> Result<TunedLoss, LossError> {
    if !(target_breakdown > 0.0 && target_breakdown < 1.0) {
        return Err(LossError::InvalidParameter {
            context: format!(
                "target breakdown fraction must lie in (0, 1), got {target_breakdown}"
            ),
        });
    }
    let ratio_minus_target = |c: f64| -> f64 {
        let loss = Biweight::new(c).expect("bracket keeps c positive");
        let b0 = consistency_b0(law, &loss, 1.0)
            .expect("biweight expectations converge for every law in this crate");
        b0 / loss.sup_rho() - target_breakdown
    };
    let c = find_root_bracketed(
        ratio_minus_target,
        CUTOFF_BRACKET.0,
        CUTOFF_BRACKET.1,
        1e-12,
        1e-12,
        200,
    )?;
    let loss = Biweight::new(c)?;
    let b0 = consistency_b0(law, &loss, 1.0)?;
    Ok(TunedLoss {
        c,
        b0,
        breakdown: b0 / loss.sup_rho(),
    })
}

/// Number of grid points used by the nesting check.
const NESTING_GRID: usize = 4000;

/// Checks that the standardized initial loss dominates the standardized
/// refinement loss, `rho0(s)/sup rho0 >= rho1(s)/sup rho1` for all `s >= 0`,
/// which is what lets the refinement stage inherit the initial stage's
/// breakdown point.
///
/// The dominance is verified on a dense grid reaching past both cutoffs; for
/// the biweight family it is equivalent to `c0 <= c1`.
pub fn check_nesting(rho0: &Biweight, rho1: &Biweight) -> Result<(), LossError> {
    let span = 1.25 * rho0.cutoff().max(rho1.cutoff());
    let (s0, s1) = (rho0.sup_rho(), rho1.sup_rho());
    for i in 0..=NESTING_GRID {
        let s = span * i as f64 / NESTING_GRID as f64;
        if rho0.rho(s) / s0 < rho1.rho(s) / s1 - 1e-12 {
            return Err(LossError::NotNested {
                c0: rho0.cutoff(),
                c1: rho1.cutoff(),
            });
        }
    }
    Ok(())
}
