//! The auxiliary M-scale: the solution `sigma > 0` of
//! `(1/n) sum_i rho(d_i / sigma) = b0` for non-negative distances `d_i`.
//!
//! With a bounded `rho` the left side decreases continuously in `sigma`
//! from `sup rho * (1 - f_0)` (where `f_0` is the fraction of exactly-zero
//! distances) down to 0, so a unique positive root exists precisely when
//! `f_0 < 1 - b0 / sup rho`. That threshold is the implosion guard: at or
//! beyond it the equation degenerates and the scale would collapse to zero.

use crate::EstimatorError;
use loss_functions::{find_root_bracketed, Biweight};

/// Relative tolerance on the scale root.
const SCALE_XTOL_REL: f64 = 1e-13;
/// Tolerance on the residual of the scale equation.
const SCALE_FTOL: f64 = 1e-12;

/// Solves the M-scale equation for the given distances.
///
/// Distances must be non-negative and finite. Fails with
/// [`EstimatorError::DegenerateResiduals`] when the share of zero distances
/// makes a positive solution impossible.
pub fn m_scale(distances: &[f64], loss: &Biweight, b0: f64) -> Result<f64, EstimatorError> {
    let n = distances.len();
    if n == 0 {
        return Err(EstimatorError::InvalidData {
            context: "cannot compute a scale from zero distances".into(),
        });
    }
    if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(EstimatorError::InvalidData {
            context: "distances must be non-negative and finite".into(),
        });
    }
    if !(b0 > 0.0 && b0 < loss.sup_rho()) {
        return Err(EstimatorError::InvalidData {
            context: format!(
                "scale calibration must satisfy 0 < b0 < sup rho, got b0 = {b0}, sup = {}",
                loss.sup_rho()
            ),
        });
    }

    let n_zero = distances.iter().filter(|d| **d == 0.0).count();
    // the equation's supremum over sigma is sup_rho * (n - n_zero) / n
    if (n - n_zero) as f64 * loss.sup_rho() <= b0 * n as f64 {
        return Err(EstimatorError::DegenerateResiduals { n_zero, n });
    }

    let mean_rho = |sigma: f64| -> f64 {
        distances.iter().map(|d| loss.rho(d / sigma)).sum::<f64>() / n as f64
    };

    // Initial guess: the max distance is always a point where the mean loss
    // is below its supremum; bracket by expansion around it.
    let d_max = distances.iter().cloned().fold(0.0, f64::max);
    let mut lo = d_max / loss.cutoff() * 1e-3;
    let mut hi = d_max / loss.cutoff() * 1e3;
    // mean_rho is decreasing in sigma: walk the ends outward until the root
    // is enclosed (a handful of steps at most for any real dataset)
    for _ in 0..200 {
        if mean_rho(lo) > b0 {
            break;
        }
        lo *= 0.25;
    }
    for _ in 0..200 {
        if mean_rho(hi) < b0 {
            break;
        }
        hi *= 4.0;
    }

    let sigma = find_root_bracketed(
        |s| mean_rho(s) - b0,
        lo,
        hi,
        SCALE_XTOL_REL * hi,
        SCALE_FTOL,
        200,
    )?;
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss() -> Biweight {
        Biweight::new(2.5).unwrap()
    }

    #[test]
    fn solves_the_equation() {
        let d: Vec<f64> = (1..=50).map(|i| i as f64 / 10.0).collect();
        let b0 = 0.4 * loss().sup_rho();
        let sigma = m_scale(&d, &loss(), b0).unwrap();
        let mean: f64 = d.iter().map(|x| loss().rho(x / sigma)).sum::<f64>() / d.len() as f64;
        assert!((mean - b0).abs() < 1e-10);
    }

    #[test]
    fn equal_distances_have_closed_form() {
        // all distances equal d0: rho(d0/sigma) = b0 exactly
        let d = vec![3.0; 20];
        let b0 = 0.3 * loss().sup_rho();
        let sigma = m_scale(&d, &loss(), b0).unwrap();
        assert!((loss().rho(3.0 / sigma) - b0).abs() < 1e-11);
    }

    #[test]
    fn scale_is_equivariant() {
        let d: Vec<f64> = vec![0.3, 1.2, 0.9, 4.5, 2.2, 0.01, 1.7];
        let b0 = 0.5 * loss().sup_rho();
        let s1 = m_scale(&d, &loss(), b0).unwrap();
        let scaled: Vec<f64> = d.iter().map(|x| 7.25 * x).collect();
        let s2 = m_scale(&scaled, &loss(), b0).unwrap();
        assert!((s2 / s1 - 7.25).abs() < 1e-9);
    }

    #[test]
    fn too_many_zeros_degenerate() {
        // b0 = sup/2: degenerate once half the distances (or more) are zero
        let b0 = 0.5 * loss().sup_rho();
        let mut d = vec![0.0; 10];
        d.extend(vec![1.0; 10]);
        assert!(matches!(
            m_scale(&d, &loss(), b0),
            Err(EstimatorError::DegenerateResiduals { n_zero: 10, n: 20 })
        ));
        // one fewer zero: solvable
        let mut d = vec![0.0; 9];
        d.extend(vec![1.0; 11]);
        assert!(m_scale(&d, &loss(), b0).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(m_scale(&[], &loss(), 0.3).is_err());
        assert!(m_scale(&[1.0, -0.5], &loss(), 0.3).is_err());
        assert!(m_scale(&[1.0, f64::NAN], &loss(), 0.3).is_err());
        assert!(m_scale(&[1.0], &loss(), 0.0).is_err());
        assert!(m_scale(&[1.0], &loss(), loss().sup_rho()).is_err());
    }

    #[test]
    fn scale_tolerates_huge_outliers() {
        let d = vec![1.0; 30];
        let base = m_scale(&d, &loss(), 0.5 * loss().sup_rho()).unwrap();
        for outlier in [1e4, 1e8, 1e12] {
            let mut contaminated = d.clone();
            for slot in contaminated.iter_mut().take(10) {
                *slot = outlier;
            }
            let s = m_scale(&contaminated, &loss(), 0.5 * loss().sup_rho()).unwrap();
            // bounded loss: the scale moves, but stays within a fixed factor
            assert!(s < 10.0 * base, "scale exploded to {s} at outlier {outlier}");
        }
    }
}
