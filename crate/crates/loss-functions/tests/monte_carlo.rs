//! Monte-Carlo cross-checks of the quadrature expectations: a million draws
//! from each radial law must reproduce E[rho(R)] within four standard errors.
//! This is the one test path that does not share any code with the
//! quadrature, so it guards against a systematically wrong density or a
//! wrong tail treatment rather than mere precision loss.

use loss_functions::{Biweight, RadialLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared as ChiSquaredDistr, Distribution, StandardNormal};

const N_DRAWS: usize = 1_000_000;

/// Draws `R = ||z||` for `z` standard normal in `dim` dimensions.
fn draw_normal_radius(dim: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut sq = 0.0;
    for _ in 0..dim {
        let g: f64 = StandardNormal.sample(rng);
        sq += g * g;
    }
    sq.sqrt()
}

/// Draws `R = ||z||` for `z` multivariate Student: a normal vector divided
/// by an independent chi-square-based mixing factor shared across all
/// coordinates.
fn draw_student_radius(dim: usize, df: f64, rng: &mut ChaCha8Rng) -> f64 {
    let chi = ChiSquaredDistr::new(df).unwrap();
    let w: f64 = chi.sample(rng);
    draw_normal_radius(dim, rng) / (w / df).sqrt()
}

fn check_against_mc(
    label: &str,
    quad_value: f64,
    draws: impl Iterator<Item = f64>,
    g: impl Fn(f64) -> f64,
) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for r in draws {
        let x = g(r);
        sum += x;
        sum_sq += x * x;
        n += 1;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let se = (var / n as f64).sqrt();
    assert!(
        (quad_value - mean).abs() < 4.0 * se,
        "{label}: quadrature {quad_value:.8} vs MC {mean:.8} (4 SE = {:.2e})",
        4.0 * se
    );
}

#[test]
fn normal_law_expectation_within_monte_carlo_error() {
    let law = RadialLaw::normal(2).unwrap();
    let bw = Biweight::new(3.0).unwrap();
    let quad = law
        .expect_bounded_tail(|r| bw.rho(r), bw.cutoff(), bw.sup_rho())
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    check_against_mc(
        "E[rho(R)] normal dim 2",
        quad,
        (0..N_DRAWS).map(|_| draw_normal_radius(2, &mut rng)),
        |r| bw.rho(r),
    );
}

#[test]
fn student_law_expectation_within_monte_carlo_error() {
    let law = RadialLaw::student(2, 1.0).unwrap();
    let bw = Biweight::new(3.0).unwrap();
    let quad = law
        .expect_bounded_tail(|r| bw.rho(r), bw.cutoff(), bw.sup_rho())
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    check_against_mc(
        "E[rho(R)] Student dim 2 df 1",
        quad,
        (0..N_DRAWS).map(|_| draw_student_radius(2, 1.0, &mut rng)),
        |r| bw.rho(r),
    );
}

#[test]
fn student_weighted_moment_within_monte_carlo_error() {
    // a bounded but non-constant-tail integrand, whose expectation follows
    // the full ladder path rather than the analytic tail split
    let dim = 5usize;
    let df = 15.0;
    let law = RadialLaw::student(dim, df).unwrap();
    let g = move |r: f64| {
        let w = (df + dim as f64) / (df + r * r);
        w * w * r.powi(4)
    };
    let quad = law.expect(g, &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    check_against_mc(
        "E[w(R)^2 R^4] Student dim 5 df 15",
        quad,
        (0..N_DRAWS).map(|_| draw_student_radius(dim, df, &mut rng)),
        g,
    );
}
