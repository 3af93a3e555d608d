//! `breakdown-bound`: finite-sample breakdown lower bound of the estimator.

use asymptotics::{breakdown_bound, kappa_general_position, max_r0};
use serde::Serialize;

use crate::args::BreakdownBoundArgs;
use crate::fmt::sig6;
use crate::{to_json, write_report, CliError};

#[derive(Serialize)]
struct BoundReport {
    n: usize,
    k: usize,
    p: usize,
    kappa: usize,
    r0: f64,
    r0_maximizing: bool,
    initial_term: f64,
    scale_term: f64,
    position_term: f64,
    bound: f64,
}

pub fn run(args: &BreakdownBoundArgs) -> Result<i32, CliError> {
    if args.k == 0 {
        return Err(CliError::input("dimension k must be at least 1"));
    }
    let kappa = kappa_general_position(args.k, args.p);
    let (r0, maximizing) = match args.r0 {
        Some(r0) => (r0, false),
        None => (max_r0(args.n, kappa), true),
    };
    let bound = breakdown_bound(args.n, r0, kappa, 1.0)?;

    let report = BoundReport {
        n: args.n,
        k: args.k,
        p: args.p,
        kappa,
        r0,
        r0_maximizing: maximizing,
        initial_term: bound.initial_term,
        scale_term: bound.scale_term,
        position_term: bound.position_term,
        bound: bound.bound,
    };
    if let Some(path) = &args.json {
        write_report(path, &to_json(&report)?)?;
    }

    println!(
        "n = {}, k = {}, p = {} (general-position count kappa = {kappa})",
        args.n, args.k, args.p
    );
    println!(
        "r0 = {}{}",
        sig6(r0),
        if maximizing { " (maximizing choice (n - kappa) / (2n))" } else { "" }
    );
    println!(
        "scale term = {}, position term = {}, initial term = {}",
        sig6(bound.scale_term),
        sig6(bound.position_term),
        sig6(bound.initial_term)
    );
    println!("breakdown bound = {}", sig6(bound.bound));
    if let Some(path) = &args.json {
        println!("report written to {}", path.display());
    }
    Ok(0)
}
