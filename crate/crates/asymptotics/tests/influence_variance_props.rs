//! Influence-function spot values and structural identities of the
//! asymptotic covariance matrices.

use asymptotics::{
    alpha_c, asymptotic_covariance, beta_c, influence_beta, influence_covariance, influence_gamma,
    influence_shape, influence_theta, normal_constants, AsymptoticConstants, InfluenceInput,
    VarianceTarget,
};
use cov_structures::{random_effects, stationary_lag, unstructured, CovStructure};
use matrix_kit::{commutation_matrix, kron, vec_of, PdCholesky};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TUNED_K2: f64 = 2.660803392947;

fn k2_constants() -> AsymptoticConstants {
    normal_constants(2, TUNED_K2, TUNED_K2).unwrap()
}

fn random_pd(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(k, k) * 0.4
}

fn input_for<'a>(
    structure: &'a CovStructure,
    sigma: &DMatrix<f64>,
    z0: DVector<f64>,
    constants: AsymptoticConstants,
) -> InfluenceInput<'a> {
    let k = structure.dim();
    let theta = structure.project(sigma).unwrap();
    InfluenceInput::new(
        structure,
        theta,
        z0,
        DMatrix::identity(k, k),
        PdCholesky::new(sigma).unwrap().inverse(),
        constants,
    )
    .unwrap()
}

#[test]
fn gain_curves_match_the_frozen_spot_values() {
    let c = k2_constants();
    let rows = [
        (0.0, 6.382094479956, 1.852066732887),
        (1.0, 4.706535555341, 2.847016259302),
        (2.0, 1.207753158257, 0.868375833923),
        (5.0, 0.0, -1.852066732887),
    ];
    for (s, alpha_want, beta_want) in rows {
        let a = alpha_c(&c, s).unwrap();
        let b = beta_c(&c, s).unwrap();
        assert!(
            (a - alpha_want).abs() < 1e-8 * alpha_want.max(1.0),
            "alpha_c({s}) = {a}, want {alpha_want}"
        );
        assert!(
            (b - beta_want).abs() < 1e-8 * beta_want.abs().max(1.0),
            "beta_c({s}) = {b}, want {beta_want}"
        );
    }
    assert!((c.scale_slope - 0.637114794534).abs() < 1e-8);
    // at a 50% tuning, beta_c(0) = 2 b0 / E[rho0'(R) R]
    let b_at_zero = beta_c(&c, 0.0).unwrap();
    assert!((b_at_zero - 2.0 * c.b0 / c.scale_slope).abs() < 1e-12);
}

#[test]
fn zero_residual_leaves_only_the_size_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let structure = unstructured(2).unwrap();
    let constants = k2_constants();
    let sigma = random_pd(2, &mut rng);
    let input = input_for(&structure, &sigma, DVector::zeros(2), constants);

    assert!(influence_beta(&input).unwrap().amax() < 1e-14);

    let theta_star = structure.project(&sigma).unwrap();
    let theta_if = influence_theta(&input).unwrap();
    let expected = -beta_c(&constants, 0.0).unwrap();
    let ratio = &theta_if - &theta_star * expected;
    assert!(
        ratio.amax() < 1e-10,
        "IF(theta) at z0=0 should be -beta_c(0) theta*: {theta_if:?}"
    );
    // the shape direction is untouched at the model point
    assert!(influence_gamma(&input).unwrap().amax() < 1e-12);
    assert!(influence_shape(&input).unwrap().amax() < 1e-12);
}

#[test]
fn covariance_influence_saturates_and_stays_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let structure = unstructured(2).unwrap();
    let constants = k2_constants();
    let sigma = random_pd(2, &mut rng);
    let theta_star = structure.project(&sigma).unwrap();
    let direction = DVector::from_vec(vec![0.6, -0.8]);

    // beyond both cutoffs the gain curves freeze: the covariance influence
    // is the constant matrix -beta_c(saturated) V(theta*)
    let mut saturated_norms = Vec::new();
    for &radius in &[3.5, 10.0, 1e2, 1e3] {
        let input = input_for(&structure, &sigma, &direction * radius, constants);
        let cov_if = influence_covariance(&input).unwrap();
        let beta_sat = beta_c(&constants, constants.c_sigma * radius).unwrap();
        let expected = structure.evaluate(&theta_star).unwrap() * (-beta_sat);
        assert!(
            (cov_if.clone() - expected).amax() < 1e-9,
            "saturated influence at radius {radius}"
        );
        saturated_norms.push(cov_if.amax());
    }
    // plateau: identical norm at every saturated radius
    for w in saturated_norms.windows(2) {
        assert!((w[0] - w[1]).abs() < 1e-10);
    }

    // and a fine sweep up to 1e3 never exceeds the overall finite bound
    let mut grid_max: f64 = 0.0;
    for i in 1..=60 {
        let radius = 10f64.powf(3.0 * i as f64 / 60.0);
        let input = input_for(&structure, &sigma, &direction * radius, constants);
        grid_max = grid_max.max(influence_covariance(&input).unwrap().amax());
    }
    assert!(grid_max.is_finite());
}

#[test]
fn shape_influence_is_trace_orthogonal_to_the_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let structure = unstructured(3).unwrap();
    let c0 = 3.452881650524; // 50% tuning in dimension 3
    let constants = normal_constants(3, c0, 4.5).unwrap();
    for _ in 0..25 {
        let sigma = random_pd(3, &mut rng);
        let z0 = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
        let input = input_for(&structure, &sigma, z0, constants);
        let shape_if = influence_shape(&input).unwrap();
        let inv = PdCholesky::new(&sigma).unwrap().inverse();
        let trace = (inv * &shape_if).trace();
        assert!(trace.abs() < 1e-9, "trace {trace}");
    }
}

#[test]
fn scale_free_targets_ignore_the_scale_response_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let structure = unstructured(2).unwrap();
    let constants = k2_constants();
    let sigma = random_pd(2, &mut rng);
    let z0 = DVector::from_vec(vec![1.3, -0.4]);

    let mut tampered = constants;
    tampered.sigma2 = 123.0;
    tampered.sigma3 = -7.0;
    tampered.b0 = 0.123;
    tampered.scale_slope = 99.0;

    let base = input_for(&structure, &sigma, z0.clone(), constants);
    let poked = input_for(&structure, &sigma, z0, tampered);

    assert_eq!(
        influence_gamma(&base).unwrap(),
        influence_gamma(&poked).unwrap()
    );
    assert_eq!(
        influence_shape(&base).unwrap(),
        influence_shape(&poked).unwrap()
    );
    let theta_star = structure.project(&sigma).unwrap();
    assert_eq!(
        asymptotic_covariance(&structure, &theta_star, &constants, VarianceTarget::Shape, None)
            .unwrap(),
        asymptotic_covariance(&structure, &theta_star, &tampered, VarianceTarget::Shape, None)
            .unwrap()
    );
    assert_eq!(
        asymptotic_covariance(&structure, &theta_star, &constants, VarianceTarget::Gamma, None)
            .unwrap(),
        asymptotic_covariance(&structure, &theta_star, &tampered, VarianceTarget::Gamma, None)
            .unwrap()
    );
}

#[test]
fn unstructured_covariance_variance_matches_the_symmetrizer_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for k in [2usize, 3] {
        let structure = unstructured(k).unwrap();
        let c0 = match k {
            2 => TUNED_K2,
            _ => 3.452881650524,
        };
        let constants = normal_constants(k, c0, c0 + 1.0).unwrap();
        let sigma = random_pd(k, &mut rng);
        let theta_star = structure.project(&sigma).unwrap();
        let got = asymptotic_covariance(
            &structure,
            &theta_star,
            &constants,
            VarianceTarget::Covariance,
            None,
        )
        .unwrap();

        let eye = DMatrix::identity(k * k, k * k);
        let symmetrizer = (eye + commutation_matrix(k)) * kron(&sigma, &sigma);
        let vec_sigma = vec_of(&sigma);
        let want = symmetrizer * constants.sigma1
            + &vec_sigma * vec_sigma.transpose() * constants.sigma2;
        assert!(
            (got.clone() - want).amax() < 1e-9 * got.amax().max(1.0),
            "k={k}"
        );
    }
}

#[test]
fn shape_variance_annihilates_the_inverse_model_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for structure in [
        unstructured(3).unwrap(),
        stationary_lag(3).unwrap(),
    ] {
        let constants = normal_constants(3, 3.452881650524, 5.0).unwrap();
        // a positive-definite point inside the structure's span
        let sigma = loop {
            let theta = DVector::from_fn(structure.n_params(), |i, _| {
                if i == 0 {
                    2.0 + rng.gen_range(0.0..0.5)
                } else {
                    rng.gen_range(-0.25..0.25)
                }
            });
            if structure.is_positive_definite_at(&theta) {
                break structure.evaluate(&theta).unwrap();
            }
        };
        let theta_star = structure.project(&sigma).unwrap();
        let var = asymptotic_covariance(
            &structure,
            &theta_star,
            &constants,
            VarianceTarget::Shape,
            None,
        )
        .unwrap();
        let inv_direction = vec_of(&PdCholesky::new(&sigma).unwrap().inverse());
        let residual = (&var * inv_direction).amax();
        assert!(residual < 1e-9 * var.amax().max(1.0), "residual {residual}");
    }
}

#[test]
fn identity_model_puts_the_scale_variance_along_the_identity() {
    let structure = unstructured(2).unwrap();
    let constants = k2_constants();
    let sigma = DMatrix::identity(2, 2);
    let theta_star = structure.project(&sigma).unwrap();
    let var = asymptotic_covariance(
        &structure,
        &theta_star,
        &constants,
        VarianceTarget::Covariance,
        None,
    )
    .unwrap();
    // vec(I) is an eigendirection with eigenvalue k * sigma3
    let v = vec_of(&sigma);
    let image = &var * &v;
    let eigenvalue = constants.k as f64 * constants.sigma3;
    assert!(
        (image - &v * eigenvalue).amax() < 1e-10,
        "expected eigenvalue {eigenvalue}"
    );
}

#[test]
fn all_variance_targets_are_symmetric_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let z1 = DMatrix::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
    let structures = [
        unstructured(4).unwrap(),
        random_effects(&[z1]).unwrap(),
        stationary_lag(4).unwrap(),
    ];
    let c0 = 4.279949371316; // not a tuned value; any valid cutoff pair works
    let constants = normal_constants(4, c0, c0 + 1.5).unwrap();
    let exx = random_pd(3, &mut rng);
    for structure in &structures {
        let sigma = loop {
            let theta = DVector::from_fn(structure.n_params(), |i, _| {
                if i == 0 {
                    2.0 + rng.gen_range(0.0..0.5)
                } else {
                    rng.gen_range(-0.2..0.2)
                }
            });
            if structure.is_positive_definite_at(&theta) {
                break structure.evaluate(&theta).unwrap();
            }
        };
        let theta_star = structure.project(&sigma).unwrap();
        for target in [
            VarianceTarget::Theta,
            VarianceTarget::Gamma,
            VarianceTarget::Covariance,
            VarianceTarget::Shape,
            VarianceTarget::Beta,
        ] {
            let exx_opt = matches!(target, VarianceTarget::Beta).then_some(&exx);
            let var =
                asymptotic_covariance(structure, &theta_star, &constants, target, exx_opt)
                    .unwrap();
            assert!(
                (var.clone() - var.transpose()).amax() < 1e-12 * var.amax().max(1.0),
                "{target:?} not symmetric for {}",
                structure.name()
            );
            let spectrum = SymmetricEigen::new(var.clone()).eigenvalues;
            let min_eig = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                min_eig > -1e-9 * var.amax().max(1.0),
                "{target:?} has eigenvalue {min_eig} for {}",
                structure.name()
            );
        }
    }
}

#[test]
fn random_effects_gram_matches_the_design_trace_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let k = 4;
    let z1 = DMatrix::from_fn(k, 2, |_, _| rng.gen_range(-1.0..1.0));
    let z2 = DMatrix::from_fn(k, 1, |_, _| rng.gen_range(-1.0..1.0));
    let structure = random_effects(&[z1.clone(), z2.clone()]).unwrap();
    let theta_star = DVector::from_vec(vec![0.7, 0.4, 1.0]);
    let sigma = structure.evaluate(&theta_star).unwrap();
    let constants = normal_constants(k, 4.0, 5.5).unwrap();

    // reconstruct the Gram matrix from the variance of theta:
    // Var(theta) = 2 sigma1 A^{-1} + sigma2 theta* theta*^T
    let var = asymptotic_covariance(
        &structure,
        &theta_star,
        &constants,
        VarianceTarget::Theta,
        None,
    )
    .unwrap();
    let gram_inv =
        (var - &theta_star * theta_star.transpose() * constants.sigma2) / (2.0 * constants.sigma1);
    let gram = PdCholesky::new(&gram_inv).unwrap().inverse();

    let inv = PdCholesky::new(&sigma).unwrap().inverse();
    let blocks = [&z1 * z1.transpose(), &z2 * z2.transpose(), DMatrix::identity(k, k)];
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate() {
            let want = (bi * &inv * bj * &inv).trace();
            assert!(
                (gram[(i, j)] - want).abs() < 1e-8 * want.abs().max(1.0),
                "Gram[{i}][{j}] = {} vs {want}",
                gram[(i, j)]
            );
        }
    }
}

#[test]
fn location_scatter_regression_variance_scales_the_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let structure = unstructured(2).unwrap();
    let constants = k2_constants();
    let sigma = random_pd(2, &mut rng);
    let theta_star = structure.project(&sigma).unwrap();
    // with X = I the design moment matrix is Sigma^{-1}
    let exx = PdCholesky::new(&sigma).unwrap().inverse();
    let var = asymptotic_covariance(
        &structure,
        &theta_star,
        &constants,
        VarianceTarget::Beta,
        Some(&exx),
    )
    .unwrap();
    assert!((var - sigma * constants.lambda).amax() < 1e-10);
}
