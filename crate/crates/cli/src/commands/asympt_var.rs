//! `asympt-var`: limiting covariance matrices of `sqrt(n) (estimate - truth)`
//! at a model point.

use asymptotics::{asymptotic_covariance, compute_constants, VarianceTarget};
use matrix_kit::PdCholesky;
use nalgebra::DVector;
use serde::Serialize;

use crate::args::AsymptVarArgs;
use crate::commands::fit::matrix_rows;
use crate::fmt::{sig6, sig6_list};
use crate::{parse_matrix, read_structure, resolve_tuning, to_json, write_report, CliError};

fn parse_target(name: &str) -> Result<VarianceTarget, CliError> {
    match name {
        "beta" => Ok(VarianceTarget::Beta),
        "theta" => Ok(VarianceTarget::Theta),
        "gamma" => Ok(VarianceTarget::Gamma),
        "covariance" => Ok(VarianceTarget::Covariance),
        "shape" => Ok(VarianceTarget::Shape),
        other => Err(CliError::input(format!(
            "unknown target `{other}`; expected beta, theta, gamma, covariance, or shape"
        ))),
    }
}

#[derive(Serialize)]
struct TargetBlock {
    target: String,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct VarianceReport {
    k: usize,
    structure: String,
    theta: Vec<f64>,
    c0: f64,
    c1: f64,
    b0: f64,
    nu: Option<f64>,
    targets: Vec<TargetBlock>,
}

pub fn run(args: &AsymptVarArgs) -> Result<i32, CliError> {
    let structure = read_structure(&args.structure)?;
    let k = structure.dim();
    if args.theta.len() != structure.n_params() {
        return Err(CliError::input(format!(
            "theta has {} entries but the structure has {} parameters",
            args.theta.len(),
            structure.n_params()
        )));
    }
    let theta = DVector::from_column_slice(&args.theta);
    let exx = match &args.exx {
        Some(text) => Some(parse_matrix(text, "--exx")?),
        None => {
            let sigma = structure.evaluate(&theta)?;
            Some(PdCholesky::new(&sigma)?.inverse())
        }
    };

    let resolved = resolve_tuning(&args.tuning, k, args.nu)?;
    let constants = compute_constants(
        &resolved.law,
        &resolved.rho0,
        &resolved.rho1,
        resolved.b0,
        1.0,
    )?;

    let mut targets = Vec::with_capacity(args.targets.len());
    for name in &args.targets {
        let target = parse_target(name)?;
        let matrix = asymptotic_covariance(&structure, &theta, &constants, target, exx.as_ref())?;
        targets.push(TargetBlock {
            target: name.clone(),
            matrix: matrix_rows(&matrix),
        });
    }

    let report = VarianceReport {
        k,
        structure: structure.name().to_string(),
        theta: args.theta.clone(),
        c0: resolved.c0,
        c1: resolved.c1,
        b0: resolved.b0,
        nu: args.nu,
        targets,
    };
    write_report(&args.out, &to_json(&report)?)?;

    println!(
        "asymptotic covariance at theta = {} ({} structure, k = {k})",
        sig6_list(&report.theta),
        report.structure
    );
    println!(
        "tuning: c0 = {}, c1 = {}, b0 = {}",
        sig6(resolved.c0),
        sig6(resolved.c1),
        sig6(resolved.b0)
    );
    for block in &report.targets {
        println!("{}:", block.target);
        for row in &block.matrix {
            println!("  {}", sig6_list(row));
        }
    }
    println!("report written to {}", args.out.display());
    Ok(0)
}
