//! Tukey's biweight loss and its derived weight functions.
//!
//! With cutoff `c > 0` the loss is
//!
//! ```text
//! rho(s) = s^2/2 - s^4/(2 c^2) + s^6/(6 c^4)   for |s| <= c,
//!          c^2/6                               otherwise,
//! ```
//!
//! which is even, twice continuously differentiable, bounded by `c^2/6`, and
//! strictly increasing on `[0, c]`. The estimation code relies on four
//! companions of `rho`: the derivative `psi = rho'`, the second derivative
//! `rho''`, the standardized weight `u(s) = rho'(s)/s` (continuously extended
//! by `u(0) = 1`), and `v(s) = rho'(s) s`.

use crate::solve::golden_max;
use crate::LossError;

/// Tukey biweight loss with cutoff `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biweight {
    c: f64,
}

impl Biweight {
    /// Creates a biweight loss; the cutoff must be finite and positive.
    pub fn new(c: f64) -> Result<Self, LossError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(LossError::InvalidParameter {
                context: format!("biweight cutoff must be finite and positive, got {c}"),
            });
        }
        Ok(Self { c })
    }

    /// The cutoff `c`.
    pub fn cutoff(&self) -> f64 {
        self.c
    }

    /// Maximum of the loss, `c^2/6`, attained for all `|s| >= c`.
    pub fn sup_rho(&self) -> f64 {
        self.c * self.c / 6.0
    }

    /// The loss `rho(s)`.
    pub fn rho(&self, s: f64) -> f64 {
        let t = s / self.c;
        let t2 = t * t;
        if t2 >= 1.0 {
            self.sup_rho()
        } else {
            // s^2 * (1/2 - t^2/2 + t^4/6), grouped to keep one rounding per term
            s * s * (0.5 + t2 * (t2 / 6.0 - 0.5))
        }
    }

    /// First derivative `rho'(s) = s (1 - (s/c)^2)^2` inside the cutoff,
    /// zero beyond it. Odd in `s`.
    pub fn drho(&self, s: f64) -> f64 {
        let t2 = (s / self.c).powi(2);
        if t2 >= 1.0 {
            0.0
        } else {
            let w = 1.0 - t2;
            s * w * w
        }
    }

    /// Second derivative `rho''(s) = (1 - (s/c)^2)(1 - 5 (s/c)^2)` inside the
    /// cutoff, zero beyond it.
    pub fn ddrho(&self, s: f64) -> f64 {
        let t2 = (s / self.c).powi(2);
        if t2 >= 1.0 {
            0.0
        } else {
            (1.0 - t2) * (1.0 - 5.0 * t2)
        }
    }

    /// Standardized weight `u(s) = rho'(s)/s = (1 - (s/c)^2)^2`, continuously
    /// extended by `u(0) = 1`. Even in `s`.
    pub fn u_weight(&self, s: f64) -> f64 {
        let t2 = (s / self.c).powi(2);
        if t2 >= 1.0 {
            0.0
        } else {
            let w = 1.0 - t2;
            w * w
        }
    }

    /// `v(s) = rho'(s) s = s^2 (1 - (s/c)^2)^2`. Even in `s`.
    pub fn v_weight(&self, s: f64) -> f64 {
        s * s * self.u_weight(s)
    }

    /// Supremum of `|rho'|`, located by bracketed maximization on `[0, c]`.
    pub fn sup_drho(&self) -> f64 {
        golden_max(|s| self.drho(s), 0.0, self.c, 1e-13 * self.c).1
    }

    /// Supremum of `v(s) = rho'(s) s`, located by bracketed maximization on
    /// `[0, c]`.
    pub fn sup_v_weight(&self) -> f64 {
        golden_max(|s| self.v_weight(s), 0.0, self.c, 1e-13 * self.c).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_cutoffs() {
        assert!(Biweight::new(0.0).is_err());
        assert!(Biweight::new(-1.0).is_err());
        assert!(Biweight::new(f64::NAN).is_err());
        assert!(Biweight::new(f64::INFINITY).is_err());
    }

    #[test]
    fn loss_shape() {
        let bw = Biweight::new(2.0).unwrap();
        assert_eq!(bw.rho(0.0), 0.0);
        assert_eq!(bw.rho(2.0), bw.sup_rho());
        assert_eq!(bw.rho(7.5), bw.sup_rho());
        assert_eq!(bw.rho(-1.0), bw.rho(1.0));
        // monotone on [0, c]
        let mut last = 0.0;
        for i in 1..=200 {
            let s = 2.0 * i as f64 / 200.0;
            let r = bw.rho(s);
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn derivatives_match_difference_quotients() {
        let bw = Biweight::new(3.0).unwrap();
        let h = 1e-6;
        for &s in &[0.2, 0.9, 1.7, 2.5, 2.99] {
            let num_d = (bw.rho(s + h) - bw.rho(s - h)) / (2.0 * h);
            assert!((num_d - bw.drho(s)).abs() < 1e-8, "drho at {s}");
            let num_dd = (bw.drho(s + h) - bw.drho(s - h)) / (2.0 * h);
            assert!((num_dd - bw.ddrho(s)).abs() < 1e-7, "ddrho at {s}");
        }
    }

    #[test]
    fn weights_are_consistent_with_derivative() {
        let bw = Biweight::new(2.5).unwrap();
        assert_eq!(bw.u_weight(0.0), 1.0);
        for &s in &[0.1, 0.5, 1.0, 2.0, 2.4, 3.0] {
            assert!((bw.u_weight(s) * s - bw.drho(s)).abs() < 1e-15);
            assert!((bw.v_weight(s) - s * bw.drho(s)).abs() < 1e-15);
        }
    }

    /// The maxima of `rho'` and `v` have closed forms: `rho'` peaks at
    /// `s = c/sqrt(5)` with value `16 c / (25 sqrt(5))`, and `v` peaks at
    /// `s = c/sqrt(3)` with value `4 c^2 / 27`. The implementation locates
    /// them numerically; the closed forms pin it down.
    #[test]
    fn suprema_match_closed_forms() {
        for &c in &[1.5, 2.660803392947, 4.652023341221, 6.775821175085, 9.0] {
            let bw = Biweight::new(c).unwrap();
            let sup_d = 16.0 * c / (25.0 * 5.0f64.sqrt());
            let sup_v = 4.0 * c * c / 27.0;
            assert!((bw.sup_drho() - sup_d).abs() < 1e-10 * sup_d);
            assert!((bw.sup_v_weight() - sup_v).abs() < 1e-10 * sup_v);
        }
    }
}
