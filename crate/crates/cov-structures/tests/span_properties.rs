//! Span-level properties of the covariance structures: evaluate/project
//! roundtrips, scale/shape splitting, and the structural constants the
//! estimation code relies on, over seeded random parameters.

use cov_structures::{random_effects, stationary_lag, unstructured, CovStructure};
use matrix_kit::{log_det_pd, vec_of};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample_structures(rng: &mut ChaCha8Rng) -> Vec<CovStructure> {
    let z_int = DMatrix::from_element(4, 1, 1.0);
    let z_slope = DMatrix::from_fn(4, 1, |i, _| i as f64);
    vec![
        unstructured(2).unwrap(),
        unstructured(4).unwrap(),
        stationary_lag(3).unwrap(),
        stationary_lag(5).unwrap(),
        random_effects(&[z_int.clone()]).unwrap(),
        random_effects(&[z_int, z_slope]).unwrap(),
        // a random two-effect design
        random_effects(&[
            DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0)),
            DMatrix::from_fn(5, 1, |_, _| rng.gen_range(-1.0..1.0)),
        ])
        .unwrap(),
    ]
}

/// A parameter vector whose `V(theta)` is positive definite: random loadings
/// on all components plus an identity ridge (every family here contains the
/// identity in its span), redrawn until the result passes the Cholesky test.
fn pd_theta(s: &CovStructure, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let ident = s
        .project(&DMatrix::identity(s.dim(), s.dim()))
        .expect("identity projects onto every family here");
    loop {
        let raw = DVector::from_fn(s.n_params(), |_, _| rng.gen_range(-0.3..0.3));
        let theta = raw + &ident * 2.0;
        if s.is_positive_definite_at(&theta) {
            return theta;
        }
    }
}

#[test]
fn project_inverts_evaluate_on_span() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for s in sample_structures(&mut rng) {
        for _ in 0..25 {
            let theta = DVector::from_fn(s.n_params(), |_, _| rng.gen_range(-2.0..2.0));
            let v = s.evaluate(&theta).unwrap();
            let back = s.project(&v).unwrap();
            assert!(
                (back - &theta).amax() < 1e-10,
                "roundtrip failed for {}",
                s.name()
            );
        }
    }
}

#[test]
fn projection_is_least_squares() {
    // for a matrix outside the span, project() must pick the Frobenius-best
    // coefficients: the residual must be orthogonal to every basis matrix
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let s = stationary_lag(4).unwrap();
    for _ in 0..10 {
        let m0 = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let m = &m0 + m0.transpose(); // symmetric, generically off-span
        let theta = s.project(&m).unwrap();
        let residual = &m - s.evaluate(&theta).unwrap();
        for b in s.basis() {
            let inner = vec_of(b).dot(&vec_of(&residual));
            assert!(inner.abs() < 1e-10, "residual not orthogonal to basis");
        }
    }
}

#[test]
fn normalize_direction_roundtrips() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for s in sample_structures(&mut rng) {
        for _ in 0..25 {
            let theta = pd_theta(&s, &mut rng);
            let (gamma, scale) = s.normalize_direction(&theta).unwrap();
            let v_gamma = s.evaluate(&gamma).unwrap();
            assert!(
                log_det_pd(&v_gamma).unwrap().abs() < 1e-9,
                "shape of {} does not have unit determinant",
                s.name()
            );
            let rebuilt = v_gamma * scale * scale;
            let v_theta = s.evaluate(&theta).unwrap();
            assert!((rebuilt - &v_theta).amax() < 1e-10 * v_theta.amax());
            assert!(scale > 0.0);
        }
    }
}

#[test]
fn coefficient_matrix_matches_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for s in sample_structures(&mut rng) {
        let coeff = s.coeff_matrix();
        assert_eq!(coeff.nrows(), s.dim() * s.dim());
        assert_eq!(coeff.ncols(), s.n_params());
        for (j, b) in s.basis().iter().enumerate() {
            assert_eq!(DVector::from(coeff.column(j)), vec_of(b));
        }
    }
}

#[test]
fn identity_is_in_every_span() {
    // the estimation code starts shape iterations from the identity
    // direction; verify it projects onto itself for each family
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for s in sample_structures(&mut rng) {
        let eye = DMatrix::identity(s.dim(), s.dim());
        let theta = s.project(&eye).unwrap();
        let back = s.evaluate(&theta).unwrap();
        assert!(
            (back - &eye).amax() < 1e-10,
            "identity not representable by {}",
            s.name()
        );
    }
}
