//! `fit`: robust three-stage fit of a long-format CSV dataset.

use mm_estimators::{fit_mm, FitConfig, LossPair};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args::FitArgs;
use crate::fmt::{sig6, sig6_list};
use crate::{csv_io, exit, read_structure, resolve_tuning, to_json, write_report, CliError};

#[derive(Serialize)]
struct ModelBlock {
    n: usize,
    k: usize,
    q: usize,
    n_params: usize,
    structure: String,
}

#[derive(Serialize)]
struct TuningBlock {
    c0: f64,
    c1: f64,
    b0: f64,
    r0: f64,
}

#[derive(Serialize)]
struct EstimateBlock {
    beta: Vec<f64>,
    theta: Vec<f64>,
    gamma: Vec<f64>,
    sigma: f64,
    covariance: Vec<Vec<f64>>,
    shape: Vec<Vec<f64>>,
}

/// The JSON fit report. Input paths are deliberately not echoed so the
/// same data produce byte-identical reports from any location.
#[derive(Serialize)]
struct FitReport {
    model: ModelBlock,
    tuning: TuningBlock,
    seed: u64,
    converged: bool,
    n_iter: usize,
    score_sup_norm: f64,
    objective: f64,
    shape_log_det: f64,
    estimates: EstimateBlock,
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn run(args: &FitArgs) -> Result<i32, CliError> {
    let structure = read_structure(&args.structure)?;
    let data = csv_io::read_long_csv(&args.data)?;
    if data.dataset.dim() != structure.dim() {
        return Err(CliError::input(format!(
            "data blocks have {} coordinates but the structure is for dimension {}",
            data.dataset.dim(),
            structure.dim()
        )));
    }

    let resolved = resolve_tuning(&args.tuning, structure.dim(), None)?;
    let losses = LossPair {
        rho0: resolved.rho0,
        rho1: resolved.rho1,
        b0: resolved.b0,
    };

    let defaults = FitConfig::default();
    let config = FitConfig {
        n_subsets: args.n_subsets.unwrap_or(defaults.n_subsets),
        n_finalists: args.n_finalists.unwrap_or(defaults.n_finalists),
        max_iter: args.max_iter.unwrap_or(defaults.max_iter),
        score_tol: args.score_tol.unwrap_or(defaults.score_tol),
        seed: args.seed,
        ..defaults
    };

    let fit = fit_mm(&data.dataset, &structure, &losses, &config)?;
    let covariance = structure.evaluate(&fit.theta)?;
    let shape = structure.evaluate(&fit.gamma)?;
    let shape_log_det = matrix_kit::log_det_pd(&shape)?;

    let report = FitReport {
        model: ModelBlock {
            n: data.dataset.n(),
            k: data.dataset.dim(),
            q: data.dataset.n_coef(),
            n_params: structure.n_params(),
            structure: structure.name().to_string(),
        },
        tuning: TuningBlock {
            c0: resolved.c0,
            c1: resolved.c1,
            b0: resolved.b0,
            r0: resolved.r0,
        },
        seed: config.seed,
        converged: fit.converged,
        n_iter: fit.n_iter,
        score_sup_norm: fit.score_norm,
        objective: fit.objective,
        shape_log_det,
        estimates: EstimateBlock {
            beta: fit.beta.iter().copied().collect(),
            theta: fit.theta.iter().copied().collect(),
            gamma: fit.gamma.iter().copied().collect(),
            sigma: fit.sigma,
            covariance: matrix_rows(&covariance),
            shape: matrix_rows(&shape),
        },
    };
    write_report(&args.out, &to_json(&report)?)?;

    println!(
        "fit: n = {}, k = {}, q = {} ({} structure, {} parameters)",
        report.model.n, report.model.k, report.model.q, report.model.structure,
        report.model.n_params
    );
    println!(
        "tuning: c0 = {}, c1 = {}, b0 = {}, breakdown r0 = {}",
        sig6(resolved.c0),
        sig6(resolved.c1),
        sig6(resolved.b0),
        sig6(resolved.r0)
    );
    println!("beta  = {}", sig6_list(&report.estimates.beta));
    println!("theta = {}", sig6_list(&report.estimates.theta));
    println!("gamma = {}", sig6_list(&report.estimates.gamma));
    println!("sigma = {}", sig6(fit.sigma));
    println!(
        "objective = {}, score sup-norm = {}, iterations = {}",
        sig6(fit.objective),
        sig6(fit.score_norm),
        fit.n_iter
    );
    println!("report written to {}", args.out.display());

    if fit.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: not converged after {} sweeps (score sup-norm {})",
            fit.n_iter,
            sig6(fit.score_norm)
        );
        Ok(exit::NO_CONVERGENCE)
    }
}
