//! Efficiency/sensitivity trade-off tables over the second cutoff, and
//! one-dimensional refinement of their minima.

use loss_functions::{consistency_b0, golden_min, Biweight, RadialLaw};
use serde::Serialize;

use crate::constants::{compute_constants, AsymptoticConstants};
use crate::AsymptoticsError;

/// Quantities a sweep can be ranked or minimized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepQuantity {
    Lambda,
    Sigma1,
    G1,
    G2,
}

impl SweepQuantity {
    /// Extracts this quantity from a computed constant bundle.
    pub fn of(self, c: &AsymptoticConstants) -> f64 {
        match self {
            SweepQuantity::Lambda => c.lambda,
            SweepQuantity::Sigma1 => c.sigma1,
            SweepQuantity::G1 => c.g1,
            SweepQuantity::G2 => c.g2,
        }
    }
}

/// Outcome of one grid point: either a full constant bundle or the
/// non-positive shape curvature that made the formulas inapplicable there.
#[derive(Debug, Clone, Serialize)]
pub enum SweepOutcome {
    Valid(AsymptoticConstants),
    DegenerateGamma1 { gamma1: f64 },
}

/// One row of the sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub c1: f64,
    pub outcome: SweepOutcome,
}

/// Efficiency table over a grid of second cutoffs at a fixed scale loss.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub k: usize,
    pub c0: f64,
    pub b0: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// The valid row minimizing `quantity`, if any row is valid.
    pub fn argmin(&self, quantity: SweepQuantity) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|row| matches!(row.outcome, SweepOutcome::Valid(_)))
            .min_by(|a, b| {
                let (va, vb) = match (&a.outcome, &b.outcome) {
                    (SweepOutcome::Valid(ca), SweepOutcome::Valid(cb)) => {
                        (quantity.of(ca), quantity.of(cb))
                    }
                    _ => unreachable!("filtered to valid rows"),
                };
                va.total_cmp(&vb)
            })
    }

    /// Whether any grid point had non-positive shape curvature.
    pub fn has_degenerate_rows(&self) -> bool {
        self.rows
            .iter()
            .any(|row| matches!(row.outcome, SweepOutcome::DegenerateGamma1 { .. }))
    }
}

/// Computes one constant bundle per grid cutoff, holding the scale loss at
/// `c0` and calibrating its consistency constant once under `law`.
///
/// Rows where the shape curvature is non-positive are flagged rather than
/// aborting the sweep; any other failure propagates.
pub fn efficiency_sweep(
    law: &RadialLaw,
    c0: f64,
    c1_grid: &[f64],
) -> Result<SweepTable, AsymptoticsError> {
    if c1_grid.is_empty() {
        return Err(AsymptoticsError::InvalidParameter {
            context: "sweep grid is empty".into(),
        });
    }
    let rho0 = Biweight::new(c0)?;
    let b0 = consistency_b0(law, &rho0, 1.0)?;
    let mut rows = Vec::with_capacity(c1_grid.len());
    for &c1 in c1_grid {
        if c1 < c0 {
            return Err(AsymptoticsError::InvalidParameter {
                context: format!("grid cutoff {c1} lies below the scale cutoff {c0}"),
            });
        }
        let rho1 = Biweight::new(c1)?;
        let outcome = match compute_constants(law, &rho0, &rho1, b0, 1.0) {
            Ok(constants) => SweepOutcome::Valid(constants),
            Err(AsymptoticsError::NonPositiveGamma1 { gamma1 }) => {
                SweepOutcome::DegenerateGamma1 { gamma1 }
            }
            Err(other) => return Err(other),
        };
        rows.push(SweepRow { c1, outcome });
    }
    Ok(SweepTable {
        k: law.dim(),
        c0,
        b0,
        rows,
    })
}

/// Number of coarse scan points used to bracket a minimum before golden-
/// section refinement.
const SCAN_POINTS: usize = 48;

/// Absolute argument tolerance of the golden-section refinement. The
/// quantities are smooth in the cutoff, so this localizes minima far more
/// tightly than the table tolerances require.
const REFINE_XTOL: f64 = 1e-7;

/// Locates the minimum of `quantity` as a function of the second cutoff on
/// `[lo, hi]`, holding the scale loss at `c0`.
///
/// A coarse scan brackets the best candidate and golden-section search
/// refines it; the interval endpoints compete as well, so a minimum sitting
/// on the boundary (typically at `c1 = c0`) is reported exactly there.
/// Returns `(argmin, min)`.
pub fn minimize_over_cutoff(
    law: &RadialLaw,
    c0: f64,
    lo: f64,
    hi: f64,
    quantity: SweepQuantity,
) -> Result<(f64, f64), AsymptoticsError> {
    if !(c0 <= lo && lo < hi) {
        return Err(AsymptoticsError::InvalidParameter {
            context: format!("need c0 <= lo < hi, got c0 = {c0}, lo = {lo}, hi = {hi}"),
        });
    }
    let rho0 = Biweight::new(c0)?;
    let b0 = consistency_b0(law, &rho0, 1.0)?;
    let value_at = |c1: f64| -> Result<f64, AsymptoticsError> {
        let rho1 = Biweight::new(c1)?;
        Ok(quantity.of(&compute_constants(law, &rho0, &rho1, b0, 1.0)?))
    };

    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    let mut grid_vals = Vec::with_capacity(SCAN_POINTS);
    for i in 0..SCAN_POINTS {
        let v = value_at(lo + step * i as f64)?;
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
        grid_vals.push(v);
    }

    // Bracket around the best scan point, clamped to the interval. Golden
    // section cannot fail inside a bracket, but it only sees the interior;
    // the explicit endpoint comparison below keeps boundary minima honest.
    let a = lo + step * best_idx.saturating_sub(1) as f64;
    let b = (lo + step * (best_idx + 1) as f64).min(hi);
    let (mut arg, mut val) = golden_min(
        |c1| value_at(c1).unwrap_or(f64::INFINITY),
        a,
        b,
        REFINE_XTOL,
    );
    for (endpoint, endpoint_val) in [(lo, grid_vals[0]), (hi, grid_vals[SCAN_POINTS - 1])] {
        if endpoint_val < val {
            arg = endpoint;
            val = endpoint_val;
        }
    }
    // Re-evaluate through the fallible path so an error that the golden
    // closure swallowed surfaces instead of an infinite "minimum".
    if !val.is_finite() {
        return Err(AsymptoticsError::NonIntegrable {
            context: format!("minimization of {quantity:?} on [{lo}, {hi}] hit a failing cutoff"),
        });
    }
    Ok((arg, val))
}
