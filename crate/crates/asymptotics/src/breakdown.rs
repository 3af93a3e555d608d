//! Finite-sample breakdown lower bound for the three-stage estimator, and
//! the hyperplane-concentration count it depends on.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::AsymptoticsError;

/// Largest point count accepted by [`kappa_exact`]; the search enumerates
/// all subsets.
pub const KAPPA_EXACT_MAX_N: usize = 12;

/// Relative singular-value threshold for the affine rank test inside
/// [`kappa_exact`].
const AFFINE_RANK_RTOL: f64 = 1e-9;

/// Absolute tolerance when deciding whether `n * r0` is an integer; guards
/// the ceiling/floor arithmetic against binary representation dust in
/// decimal tunings such as `r0 = 0.45`.
const COUNT_EPS: f64 = 1e-9;

/// A breakdown lower bound together with the three terms it is the minimum
/// of, so reports can show which constraint binds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BreakdownBound {
    pub n: usize,
    pub kappa: usize,
    pub r0: f64,
    /// Breakdown point of the initial estimator supplied by the caller.
    pub initial_term: f64,
    /// Scale-implosion constraint, `ceil(n r0) / n`.
    pub scale_term: f64,
    /// Hyperplane-concentration constraint, `(ceil(n - n r0) - kappa) / n`.
    pub position_term: f64,
    /// The bound itself: the minimum of the three terms.
    pub bound: f64,
}

fn floor_count(x: f64) -> i64 {
    let rounded = x.round();
    if (x - rounded).abs() < COUNT_EPS {
        rounded as i64
    } else {
        x.floor() as i64
    }
}

fn ceil_count(x: f64) -> i64 {
    let rounded = x.round();
    if (x - rounded).abs() < COUNT_EPS {
        rounded as i64
    } else {
        x.ceil() as i64
    }
}

/// Lower bound on the replacement breakdown point of the full three-stage
/// fit with scale tuning ratio `r0 = b0 / sup rho0`, on `n` points of which
/// at most `kappa` share a hyperplane, starting from an initial estimator
/// with breakdown point `eps_initial`.
///
/// Requires `0 < floor(n r0) < n - kappa`; outside that range the bound's
/// hypothesis fails and no statement is available.
pub fn breakdown_bound(
    n: usize,
    r0: f64,
    kappa: usize,
    eps_initial: f64,
) -> Result<BreakdownBound, AsymptoticsError> {
    if n == 0 || !(r0 > 0.0 && r0 < 1.0) || !(eps_initial > 0.0) {
        return Err(AsymptoticsError::InvalidParameter {
            context: format!(
                "need n > 0, r0 in (0,1) and a positive initial breakdown; got n = {n}, r0 = {r0}, eps_initial = {eps_initial}"
            ),
        });
    }
    let nf = n as f64;
    let mass = nf * r0;
    let floor_mass = floor_count(mass);
    if !(0 < floor_mass && floor_mass < n as i64 - kappa as i64) {
        return Err(AsymptoticsError::PreconditionViolated {
            context: format!(
                "bound needs 0 < floor(n r0) = {floor_mass} < n - kappa = {}",
                n as i64 - kappa as i64
            ),
        });
    }
    let scale_term = ceil_count(mass) as f64 / nf;
    let position_term = (ceil_count(nf - mass) - kappa as i64) as f64 / nf;
    let bound = eps_initial.min(scale_term).min(position_term);
    Ok(BreakdownBound {
        n,
        kappa,
        r0,
        initial_term: eps_initial,
        scale_term,
        position_term,
        bound,
    })
}

/// The tuning ratio maximizing the breakdown bound, `(n - kappa) / (2n)`;
/// at this `r0` the bound equals `floor((n - kappa + 1) / 2) / n`.
pub fn max_r0(n: usize, kappa: usize) -> f64 {
    (n as f64 - kappa as f64) / (2.0 * n as f64)
}

/// The hyperplane-concentration count for data in general position:
/// `k + p` for block dimension `k` and `p` covariate carriers, reducing to
/// `k` for common-design models (`p = 0`).
pub fn kappa_general_position(k: usize, p: usize) -> usize {
    k + p
}

/// Exact maximal number of the given points lying on a common hyperplane,
/// by enumeration of all subsets with an affine rank test.
///
/// Any `d` points in dimension `d` span at most a hyperplane, so the result
/// is at least `min(n, d)`; data from a continuous law exceed that only
/// with probability zero. Capped at [`KAPPA_EXACT_MAX_N`] points.
pub fn kappa_exact(points: &[nalgebra::DVector<f64>]) -> Result<usize, AsymptoticsError> {
    let n = points.len();
    if n > KAPPA_EXACT_MAX_N {
        return Err(AsymptoticsError::TooLarge {
            n,
            max: KAPPA_EXACT_MAX_N,
        });
    }
    if n == 0 {
        return Ok(0);
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(AsymptoticsError::InvalidParameter {
            context: "points must share a positive dimension".into(),
        });
    }

    // Baseline: subsets of up to `dim` points always fit on a hyperplane.
    let mut best = n.min(dim);
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if affine_rank(points, &members) <= dim - 1 {
            best = size;
        }
    }
    Ok(best)
}

/// Rank of the differences to the first member: the dimension of the
/// affine span of the selected points.
fn affine_rank(points: &[nalgebra::DVector<f64>], members: &[usize]) -> usize {
    let dim = points[members[0]].len();
    let rows = members.len() - 1;
    let mut diffs = DMatrix::zeros(rows, dim);
    for (r, &i) in members[1..].iter().enumerate() {
        let d = &points[i] - &points[members[0]];
        diffs.row_mut(r).copy_from(&d.transpose());
    }
    let svd = diffs.svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max_sv == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > AFFINE_RANK_RTOL * max_sv)
        .count()
}
