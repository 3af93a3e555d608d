//! Small scalar solvers: a safeguarded bracketed root finder and
//! golden-section extremum search. Both are used on smooth, well-behaved
//! functions (monotone consistency equations, unimodal weight profiles), so
//! simplicity and guaranteed bracketing matter more than iteration counts.

use crate::LossError;

/// Finds a root of `f` inside `[a, b]` by the Illinois variant of regula
/// falsi, falling back to bisection whenever the secant step leaves the
/// bracket. Requires a sign change on the bracket.
///
/// Converges when the bracket shrinks below `xtol` (absolute) or `|f|`
/// drops below `ftol`.
pub fn find_root_bracketed<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64, LossError> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(LossError::BracketingFailed {
            context: format!("no sign change on [{lo}, {hi}]: f = ({flo:.3e}, {fhi:.3e})"),
        });
    }
    // Illinois bookkeeping: which endpoint was retained on the last step.
    let mut last_kept: i8 = 0;
    for _ in 0..max_iter {
        // secant proposal, replaced by the midpoint when degenerate
        let mut x = hi - fhi * (hi - lo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() <= ftol || (hi - lo) <= xtol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if last_kept == 1 {
                fhi *= 0.5; // Illinois: damp the stagnant endpoint
            }
            last_kept = 1;
        } else {
            hi = x;
            fhi = fx;
            if last_kept == -1 {
                flo *= 0.5;
            }
            last_kept = -1;
        }
    }
    Err(LossError::BracketingFailed {
        context: format!("no convergence after {max_iter} iterations on [{lo}, {hi}]"),
    })
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)` with the argument located to within `tol`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, neg) = golden_min(|s| -f(s), a, b, tol);
    (x, -neg)
}
