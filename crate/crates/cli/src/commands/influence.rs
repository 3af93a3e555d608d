//! `influence`: first-order effect of one contaminating observation on
//! every estimation target.

use asymptotics::{
    compute_constants, influence_beta, influence_covariance, influence_gamma, influence_shape,
    influence_theta, InfluenceInput,
};
use matrix_kit::PdCholesky;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::args::InfluenceArgs;
use crate::commands::fit::matrix_rows;
use crate::fmt::{sig6, sig6_list};
use crate::{parse_matrix, read_structure, resolve_tuning, to_json, write_report, CliError};

#[derive(Serialize)]
struct InfluenceReport {
    k: usize,
    structure: String,
    theta: Vec<f64>,
    beta: Vec<f64>,
    y0: Vec<f64>,
    c0: f64,
    c1: f64,
    b0: f64,
    nu: Option<f64>,
    if_beta: Vec<f64>,
    if_theta: Vec<f64>,
    if_gamma: Vec<f64>,
    if_covariance: Vec<Vec<f64>>,
    if_shape: Vec<Vec<f64>>,
}

pub fn run(args: &InfluenceArgs) -> Result<i32, CliError> {
    let structure = read_structure(&args.structure)?;
    let k = structure.dim();
    if args.theta.len() != structure.n_params() {
        return Err(CliError::input(format!(
            "theta has {} entries but the structure has {} parameters",
            args.theta.len(),
            structure.n_params()
        )));
    }
    if args.y0.len() != k {
        return Err(CliError::input(format!(
            "y0 has {} coordinates but the structure has dimension {k}",
            args.y0.len()
        )));
    }

    let x0 = match &args.x0 {
        Some(text) => parse_matrix(text, "--x0")?,
        None => DMatrix::identity(k, k),
    };
    if x0.nrows() != k || x0.ncols() != args.beta.len() {
        return Err(CliError::input(format!(
            "x0 is {}x{} but must be {k} rows by {} coefficients",
            x0.nrows(),
            x0.ncols(),
            args.beta.len()
        )));
    }

    let theta = DVector::from_column_slice(&args.theta);
    let beta = DVector::from_column_slice(&args.beta);
    let y0 = DVector::from_column_slice(&args.y0);

    let exx = match &args.exx {
        Some(text) => parse_matrix(text, "--exx")?,
        None => {
            let sigma = structure.evaluate(&theta)?;
            PdCholesky::new(&sigma)?.inverse()
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
    let input = InfluenceInput::from_observation(
        &structure,
        theta.clone(),
        &beta,
        &y0,
        x0,
        exx,
        constants,
    )?;

    let report = InfluenceReport {
        k,
        structure: structure.name().to_string(),
        theta: args.theta.clone(),
        beta: args.beta.clone(),
        y0: args.y0.clone(),
        c0: resolved.c0,
        c1: resolved.c1,
        b0: resolved.b0,
        nu: args.nu,
        if_beta: influence_beta(&input)?.iter().copied().collect(),
        if_theta: influence_theta(&input)?.iter().copied().collect(),
        if_gamma: influence_gamma(&input)?.iter().copied().collect(),
        if_covariance: matrix_rows(&influence_covariance(&input)?),
        if_shape: matrix_rows(&influence_shape(&input)?),
    };
    write_report(&args.out, &to_json(&report)?)?;

    println!(
        "influence at y0 = {} ({} structure, k = {k})",
        sig6_list(&report.y0),
        report.structure
    );
    println!(
        "tuning: c0 = {}, c1 = {}, b0 = {}",
        sig6(resolved.c0),
        sig6(resolved.c1),
        sig6(resolved.b0)
    );
    println!("IF beta  = {}", sig6_list(&report.if_beta));
    println!("IF theta = {}", sig6_list(&report.if_theta));
    println!("IF gamma = {}", sig6_list(&report.if_gamma));
    for (label, rows) in [
        ("IF covariance", &report.if_covariance),
        ("IF shape", &report.if_shape),
    ] {
        println!("{label}:");
        for row in rows.iter() {
            println!("  {}", sig6_list(row));
        }
    }
    println!("report written to {}", args.out.display());
    Ok(0)
}
