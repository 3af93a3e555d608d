//! Finite-sample contamination quotients (empirical influence curves).

use crate::SimError;
use matrix_kit::PdCholesky;
use mm_estimators::{fit_mm, m_scale, mm_refine, Dataset, FitConfig, LossPair};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// One contamination mass on the curve.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityPoint {
    /// Copies of the contaminating observation appended to the sample.
    pub mass: usize,
    /// Contamination weight `h = mass / (n + mass)`.
    pub h: f64,
    /// `(beta(P_h) - beta(P_n)) / h`, coordinate by coordinate.
    pub beta_quotient: Vec<f64>,
    /// `(theta(P_h) - theta(P_n)) / h`.
    pub theta_quotient: Vec<f64>,
}

/// A finite-sample influence curve for one contaminating observation.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityCurve {
    /// Clean sample size.
    pub n: usize,
    /// Quotients, ordered by increasing mass.
    pub points: Vec<SensitivityPoint>,
    /// Linear `h -> 0` extrapolation of the coefficient quotient from the
    /// two smallest masses.
    pub beta_extrapolated: Vec<f64>,
    /// Linear `h -> 0` extrapolation of the covariance-parameter quotient.
    pub theta_extrapolated: Vec<f64>,
    /// Clean-fit coefficients the quotients are measured from.
    pub base_beta: Vec<f64>,
    /// Clean-fit covariance parameters.
    pub base_theta: Vec<f64>,
    /// Clean-fit auxiliary scale.
    pub base_sigma: f64,
}

/// Extends `data` with `mass` copies of the contaminating unit.
fn contaminated_copy(
    data: &Dataset,
    y0: &DVector<f64>,
    x0: &DMatrix<f64>,
    mass: usize,
) -> Result<Dataset, SimError> {
    let mut ys = Vec::with_capacity(data.n() + mass);
    let mut xs = Vec::with_capacity(data.n() + mass);
    for i in 0..data.n() {
        ys.push(data.y(i).clone());
        xs.push(data.x(i).clone());
    }
    for _ in 0..mass {
        ys.push(y0.clone());
        xs.push(x0.clone());
    }
    Ok(Dataset::new(ys, xs)?)
}

/// Traces the contamination path `P_h = (1 - h) P_n + h delta_{(y0, x0)}`
/// through the estimator and differences it against the clean fit.
///
/// Point masses are realized exactly by appending `mass` integer copies of
/// the contaminating unit, so `h = mass / (n + mass)`. Each contaminated
/// refit follows the estimator's local branch: the auxiliary scale is
/// re-solved on the contaminated sample at the clean parameters, and the
/// refinement stage restarts from the clean fit. The `h -> 0` limit of the
/// quotients is the natural finite-sample counterpart of the influence
/// function, and the returned extrapolation removes the leading `O(h)` term
/// using the two smallest masses.
pub fn sensitivity_curve(
    data: &Dataset,
    structure: &cov_structures::CovStructure,
    losses: &LossPair,
    config: &FitConfig,
    y0: &DVector<f64>,
    x0: &DMatrix<f64>,
    masses: &[usize],
) -> Result<SensitivityCurve, SimError> {
    if y0.len() != data.dim() || x0.nrows() != data.dim() || x0.ncols() != data.n_coef() {
        return Err(SimError::InvalidConfig {
            context: format!(
                "contaminating unit has y of length {} and X of {}x{}; expected {} and {}x{}",
                y0.len(),
                x0.nrows(),
                x0.ncols(),
                data.dim(),
                data.dim(),
                data.n_coef()
            ),
        });
    }
    let mut masses: Vec<usize> = masses.iter().copied().filter(|&m| m > 0).collect();
    masses.sort_unstable();
    masses.dedup();
    if masses.is_empty() {
        return Err(SimError::InvalidConfig {
            context: "sensitivity curve needs at least one positive contamination mass".into(),
        });
    }

    let base = fit_mm(data, structure, losses, config)?;
    let shape = structure.evaluate(&base.gamma)?;
    let shape_chol = PdCholesky::new(&shape)?;

    let mut points = Vec::with_capacity(masses.len());
    for &mass in &masses {
        let contaminated = contaminated_copy(data, y0, x0, mass)?;
        let h = mass as f64 / (data.n() + mass) as f64;

        // Scale stage on the contaminated sample, evaluated at the clean
        // parameters (the initial functional moves only O(h) and its
        // movement does not feed the scale to first order).
        let dists: Vec<f64> = (0..contaminated.n())
            .map(|i| {
                let center = contaminated.x(i) * &base.beta;
                matrix_kit::mahalanobis_with(contaminated.y(i), &center, &shape_chol)
            })
            .collect();
        let sigma_h = m_scale(&dists, &losses.rho0, losses.b0)?;

        let refit = mm_refine(
            &contaminated,
            structure,
            losses,
            sigma_h,
            &base.beta,
            &base.gamma,
            config,
        )?;
        points.push(SensitivityPoint {
            mass,
            h,
            beta_quotient: ((&refit.beta - &base.beta) / h).iter().copied().collect(),
            theta_quotient: ((&refit.theta - &base.theta) / h).iter().copied().collect(),
        });
    }

    let beta_extrapolated = extrapolate(&points, |p| &p.beta_quotient);
    let theta_extrapolated = extrapolate(&points, |p| &p.theta_quotient);
    Ok(SensitivityCurve {
        n: data.n(),
        points,
        beta_extrapolated,
        theta_extrapolated,
        base_beta: base.beta.iter().copied().collect(),
        base_theta: base.theta.iter().copied().collect(),
        base_sigma: base.sigma,
    })
}

/// Intercept at `h = 0` of the line through the two smallest-mass points
/// (the quotient itself when only one mass was probed).
fn extrapolate<'a>(
    points: &'a [SensitivityPoint],
    select: impl Fn(&'a SensitivityPoint) -> &'a Vec<f64>,
) -> Vec<f64> {
    if points.len() == 1 {
        return select(&points[0]).clone();
    }
    let (p1, p2) = (&points[0], &points[1]);
    let (q1, q2) = (select(p1), select(p2));
    q1.iter()
        .zip(q2)
        .map(|(a, b)| a - p1.h * (b - a) / (p2.h - p1.h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_recovers_a_linear_trend() {
        let points = vec![
            SensitivityPoint {
                mass: 1,
                h: 0.01,
                beta_quotient: vec![2.0 + 3.0 * 0.01],
                theta_quotient: vec![-1.0 + 0.5 * 0.01],
            },
            SensitivityPoint {
                mass: 2,
                h: 0.02,
                beta_quotient: vec![2.0 + 3.0 * 0.02],
                theta_quotient: vec![-1.0 + 0.5 * 0.02],
            },
        ];
        let beta = extrapolate(&points, |p| &p.beta_quotient);
        let theta = extrapolate(&points, |p| &p.theta_quotient);
        assert!((beta[0] - 2.0).abs() < 1e-12);
        assert!((theta[0] + 1.0).abs() < 1e-12);
    }
}
