//! Numerical anchors for the loss/law machinery.
//!
//! The reference values below were produced by an independent implementation
//! (closed-form incomplete-gamma moments where available, high-accuracy
//! quadrature elsewhere) and are frozen here to 12 digits. They pin down the
//! quadrature, the radial densities, and the tuning solver all at once: a
//! regression in any of them shows up as a mismatch against these constants.

use loss_functions::{consistency_b0, tune_cutoff, Biweight, RadialLaw};

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() < tol,
        "{what}: got {got:.12}, want {want:.12} (|diff| = {:.2e})",
        (got - want).abs()
    );
}

#[test]
fn normal_law_biweight_expectations_dim2() {
    let law = RadialLaw::normal(2).unwrap();
    let bw = Biweight::new(3.0).unwrap();
    let c = bw.cutoff();

    let e_rho = law.expect_bounded_tail(|r| bw.rho(r), c, bw.sup_rho()).unwrap();
    assert_close(e_rho, 0.653223802811, 1e-9, "E[rho(R)]");

    let e_drho_sq = law.expect(|r| bw.drho(r).powi(2), &[c]).unwrap();
    assert_close(e_drho_sq, 0.465927261280, 1e-9, "E[rho'(R)^2]");

    let e_u = law.expect(|r| bw.u_weight(r), &[c]).unwrap();
    assert_close(e_u, 0.653223802811, 1e-9, "E[u(R)]");

    let e_v = law.expect(|r| bw.v_weight(r), &[c]).unwrap();
    assert_close(e_v, 0.798357042166, 1e-9, "E[v(R)]");

    let e_ddrho = law.expect(|r| bw.ddrho(r), &[c]).unwrap();
    assert_close(e_ddrho, 0.145133239355, 1e-9, "E[rho''(R)]");
}

/// In dimension 2 the chi survival function equals density divided by
/// radius, and integration by parts gives `E[u(R)] = E[rho(R)]` exactly.
/// The frozen values above already agree; this checks it fresh for other
/// cutoffs.
#[test]
fn dim2_identity_mean_weight_equals_mean_loss() {
    let law = RadialLaw::normal(2).unwrap();
    for &c in &[1.7, 2.660803392947, 4.0] {
        let bw = Biweight::new(c).unwrap();
        let e_u = law.expect(|r| bw.u_weight(r), &[c]).unwrap();
        let e_rho = law.expect_bounded_tail(|r| bw.rho(r), c, bw.sup_rho()).unwrap();
        assert_close(e_u, e_rho, 1e-9, "E[u] vs E[rho]");
    }
}

#[test]
fn normal_law_biweight_expectations_dim5() {
    let law = RadialLaw::normal(5).unwrap();
    let bw = Biweight::new(4.0).unwrap();
    let e_rho = law
        .expect_bounded_tail(|r| bw.rho(r), bw.cutoff(), bw.sup_rho())
        .unwrap();
    assert_close(e_rho, 1.610996967249, 1e-9, "E[rho(R)] dim 5");

    let e = law
        .expect(|r| (bw.drho(r) * r).powi(2), &[bw.cutoff()])
        .unwrap();
    assert_close(e, 3.728234685709, 1e-8, "E[rho'(R)^2 R^2] dim 5");
}

#[test]
fn student_law_biweight_expectation() {
    let law = RadialLaw::student(2, 1.0).unwrap();
    let bw = Biweight::new(3.0).unwrap();
    let e_rho = law
        .expect_bounded_tail(|r| bw.rho(r), bw.cutoff(), bw.sup_rho())
        .unwrap();
    assert_close(e_rho, 0.927425619864, 1e-9, "E[rho(R)] under Student df=1");
}

#[test]
fn tuned_cutoffs_at_half_breakdown() {
    for &(k, c_want, b0_want) in &[
        (2usize, 2.660803392947, 0.589989557993),
        (5, 4.652023341221, 1.803443430605),
        (10, 6.775821175085, 3.825979383060),
    ] {
        let law = RadialLaw::normal(k).unwrap();
        let tuned = tune_cutoff(&law, 0.5).unwrap();
        assert_close(tuned.c, c_want, 1e-8, &format!("cutoff at dim {k}"));
        assert_close(tuned.b0, b0_want, 1e-8, &format!("b0 at dim {k}"));
    }
}

#[test]
fn tuned_cutoffs_across_breakdown_fractions() {
    let law = RadialLaw::normal(3).unwrap();
    for &(r, c_want) in &[
        (0.10, 9.210965586357),
        (0.25, 5.528074074565),
        (0.50, 3.452881650524),
        (0.75, 2.237564296565),
        (0.90, 1.484961213565),
    ] {
        let tuned = tune_cutoff(&law, r).unwrap();
        assert_close(tuned.c, c_want, 1e-8, &format!("cutoff at breakdown {r}"));
    }
}

#[test]
fn consistency_via_rescaled_radius() {
    // scaling the radius by t is the same as shrinking the cutoff to c/t
    let law = RadialLaw::normal(4).unwrap();
    let bw = Biweight::new(5.0).unwrap();
    let t = 1.7;
    let direct = consistency_b0(&law, &bw, t).unwrap();
    let shrunk = Biweight::new(5.0 / t).unwrap();
    let reference = law
        .expect_bounded_tail(
            |r| t * t * shrunk.rho(r),
            shrunk.cutoff(),
            t * t * shrunk.sup_rho(),
        )
        .unwrap();
    // rho_c(t r) = t^2 rho_{c/t}(r) for the biweight
    assert_close(direct, reference, 1e-10, "rescaling identity");
}
