//! `simulate`: replicated Monte-Carlo studies from a JSON configuration.

use serde::Serialize;
use sim_harness::{run_replications, variance_summary, SimConfig, VarianceStudy};

use crate::args::SimulateArgs;
use crate::fmt::sig6;
use crate::{to_json, write_report, CliError};

/// Replications needed for the study report to include a variance
/// comparison against the closed-form asymptotics (clean data only);
/// matches the threshold enforced by the study machinery.
const STUDY_MIN_REPLICATIONS: usize = 200;

#[derive(Serialize)]
struct SimulationReport {
    config: SimConfig,
    replications: usize,
    failures: usize,
    non_converged: usize,
    variance_study: Option<VarianceStudy>,
}

pub fn run(args: &SimulateArgs) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", args.config.display())))?;
    let cfg = SimConfig::from_json(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", args.config.display())))?;
    cfg.validate()?;

    let records = run_replications(&cfg)?;
    let failures = records.iter().filter(|r| r.failed).count();
    let non_converged = records.iter().filter(|r| !r.failed && !r.converged).count();

    // Per-replication estimates in long CSV form, full precision.
    let mut writer = csv::WriterBuilder::new()
        .from_path(&args.csv)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", args.csv.display())))?;
    let mut header = vec![
        "rep".to_string(),
        "failed".to_string(),
        "converged".to_string(),
        "n_iter".to_string(),
        "sigma".to_string(),
    ];
    let n_beta = cfg.beta.len();
    let n_theta = cfg.theta.len();
    header.extend((1..=n_beta).map(|i| format!("beta{i}")));
    header.extend((1..=n_theta).map(|i| format!("gamma{i}")));
    header.extend((1..=n_theta).map(|i| format!("theta{i}")));
    header.push("error".to_string());
    writer
        .write_record(&header)
        .map_err(|e| CliError::input(format!("csv failure: {e}")))?;
    for record in &records {
        let mut row = vec![
            record.rep.to_string(),
            record.failed.to_string(),
            record.converged.to_string(),
            record.n_iter.to_string(),
            record.sigma.to_string(),
        ];
        let pad = |values: &[f64], len: usize, row: &mut Vec<String>| {
            for i in 0..len {
                row.push(values.get(i).map_or(String::new(), |v| v.to_string()));
            }
        };
        pad(&record.beta, n_beta, &mut row);
        pad(&record.gamma, n_theta, &mut row);
        pad(&record.theta, n_theta, &mut row);
        row.push(record.error.clone().unwrap_or_default());
        writer
            .write_record(&row)
            .map_err(|e| CliError::input(format!("csv failure: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::input(format!("csv failure: {e}")))?;

    // The theory comparison needs enough replications for fourth-moment
    // sample covariances and a contamination-free model.
    let study = if cfg.replications >= STUDY_MIN_REPLICATIONS && cfg.contamination.is_none() {
        Some(variance_summary(&cfg, &records)?)
    } else {
        None
    };

    let report = SimulationReport {
        config: cfg.clone(),
        replications: cfg.replications,
        failures,
        non_converged,
        variance_study: study,
    };
    write_report(&args.out, &to_json(&report)?)?;

    println!(
        "simulate: n = {}, replications = {}, seed = {}",
        cfg.n, cfg.replications, cfg.seed
    );
    println!("failures = {failures}, non-converged = {non_converged}");
    if let Some(study) = &report.variance_study {
        println!(
            "relative Frobenius gap to theory: beta = {}, gamma = {}, theta = {}",
            sig6(study.beta.relative_frobenius),
            sig6(study.gamma.relative_frobenius),
            sig6(study.theta.relative_frobenius)
        );
        println!(
            "beta-gamma cross covariance: max |entry| = {} ({} standard errors)",
            sig6(study.cross_beta_gamma.max_abs_entry),
            sig6(study.cross_beta_gamma.max_se_units)
        );
        for note in &study.notes {
            println!("note: {note}");
        }
    } else {
        println!(
            "variance study skipped (needs at least {STUDY_MIN_REPLICATIONS} replications \
             and no contamination)"
        );
    }
    println!(
        "report written to {}, replications to {}",
        args.out.display(),
        args.csv.display()
    );
    Ok(0)
}
