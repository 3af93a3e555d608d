//! Command-line interface definition.

use clap::{Args, Parser, Subcommand};

/// Robust fitting and theory tables for balanced multivariate linear models
/// with structured covariance.
#[derive(Debug, Parser)]
#[command(name = "robustmm", version, about, max_term_width = 100)]
pub struct Cli {
    /// Worker threads for replicated studies (the ROBUSTMM_THREADS
    /// environment variable overrides this flag). Defaults to one thread
    /// per available core. Results do not depend on the choice.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the robust model to a long-format CSV dataset.
    Fit(FitArgs),
    /// Print the asymptotic constants for one tuning.
    Constants(ConstantsArgs),
    /// Tabulate efficiency and sensitivity over a grid of refinement
    /// cutoffs, and write a plot-ready CSV.
    Sweep(SweepArgs),
    /// Evaluate the influence function at one observation.
    Influence(InfluenceArgs),
    /// Print asymptotic covariance matrices at a model point.
    AsymptVar(AsymptVarArgs),
    /// Evaluate the finite-sample breakdown bound.
    BreakdownBound(BreakdownBoundArgs),
    /// Run a simulation study from a JSON configuration.
    Simulate(SimulateArgs),
}

/// Scale/refinement tuning shared by the model-based commands: the scale
/// cutoff comes from --c0 or from a breakdown target, the refinement cutoff
/// from --c1 (defaulting to the scale cutoff).
#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Explicit scale-stage cutoff (conflicts with --target-bdp).
    #[arg(long, conflicts_with = "target_bdp")]
    pub c0: Option<f64>,
    /// Breakdown fraction to tune the scale cutoff for (default 0.5).
    #[arg(long)]
    pub target_bdp: Option<f64>,
    /// Refinement-stage cutoff; defaults to the resolved scale cutoff.
    #[arg(long)]
    pub c1: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Long-format CSV dataset: header `subject,t,y,x1..xq`, one row per
    /// subject and coordinate, coordinates `t = 1..k` complete within each
    /// subject block.
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Covariance-structure descriptor (JSON).
    #[arg(long)]
    pub structure: std::path::PathBuf,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Where to write the JSON fit report.
    #[arg(long, default_value = "fit-report.json")]
    pub out: std::path::PathBuf,
    /// Seed for the initial-stage subset draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Elemental subsets drawn in the initial stage.
    #[arg(long)]
    pub n_subsets: Option<usize>,
    /// Candidates refined to convergence before picking the winner.
    #[arg(long)]
    pub n_finalists: Option<usize>,
    /// Cap on refinement sweeps.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Convergence tolerance on the estimating equations.
    #[arg(long)]
    pub score_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// Response dimension.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Student degrees of freedom; switches the reference law from normal
    /// to Student (with the consistency constant recalibrated under it).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Optional path for a JSON copy of the constants.
    #[arg(long)]
    pub json: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Response dimension.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Student degrees of freedom for a relative-efficiency sweep under the
    /// Student law.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Refinement-cutoff grid `lo:hi:points` (inclusive endpoints).
    #[arg(long, conflicts_with = "c1", value_parser = parse_grid)]
    pub c1_grid: Option<Grid>,
    /// Plot-ready CSV destination (c1 against efficiency multipliers and
    /// gross-error sensitivities).
    #[arg(long, default_value = "sweep.csv")]
    pub out: std::path::PathBuf,
}

/// An inclusive linear grid.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + step * i as f64).collect()
    }
}

fn parse_grid(text: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:points".into());
    }
    let lo: f64 = parts[0].parse().map_err(|_| "bad grid start".to_string())?;
    let hi: f64 = parts[1].parse().map_err(|_| "bad grid end".to_string())?;
    let points: usize = parts[2].parse().map_err(|_| "bad grid size".to_string())?;
    if !(lo.is_finite() && hi.is_finite()) || points == 0 || (points > 1 && !(lo < hi)) {
        return Err("grid needs finite lo < hi and at least one point".into());
    }
    Ok(Grid { lo, hi, points })
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    /// Covariance-structure descriptor (JSON).
    #[arg(long)]
    pub structure: std::path::PathBuf,
    /// Model covariance parameters, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Model coefficients, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
    /// Contaminating response, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Vec<f64>,
    /// Contaminating design matrix, rows separated by ';', entries by ','
    /// (defaults to the identity, which requires as many coefficients as
    /// response coordinates).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Average design information E[X' V^{-1} X], same matrix syntax
    /// (defaults to the model V^{-1}, the identity-design value).
    #[arg(long, allow_hyphen_values = true)]
    pub exx: Option<String>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Student degrees of freedom for the reference law.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Where to write the JSON influence report.
    #[arg(long, default_value = "influence.json")]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct AsymptVarArgs {
    /// Covariance-structure descriptor (JSON).
    #[arg(long)]
    pub structure: std::path::PathBuf,
    /// Model covariance parameters, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Average design information E[X' V^{-1} X], rows ';'-separated
    /// (defaults to the model V^{-1}).
    #[arg(long, allow_hyphen_values = true)]
    pub exx: Option<String>,
    /// Targets to report, comma-separated subset of
    /// beta,theta,gamma,covariance,shape.
    #[arg(long, value_delimiter = ',', default_value = "beta,theta,gamma,covariance,shape")]
    pub targets: Vec<String>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Student degrees of freedom for the reference law.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Where to write the JSON report.
    #[arg(long, default_value = "asympt-var.json")]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct BreakdownBoundArgs {
    /// Sample size.
    #[arg(long)]
    pub n: usize,
    /// Response dimension.
    #[arg(long)]
    pub k: usize,
    /// Regression parameters beyond a common design (general-position
    /// constant kappa = k + p).
    #[arg(long, default_value_t = 0)]
    pub p: usize,
    /// Scale-stage breakdown tuning r0 (conflicts with --max).
    #[arg(long, conflicts_with = "max")]
    pub r0: Option<f64>,
    /// Evaluate at the r0 that maximizes the bound (the default when no
    /// --r0 is given).
    #[arg(long)]
    pub max: bool,
    /// Optional path for a JSON copy of the bound.
    #[arg(long)]
    pub json: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation study configuration (JSON).
    #[arg(long)]
    pub config: std::path::PathBuf,
    /// Where to write the JSON study report.
    #[arg(long, default_value = "sim-report.json")]
    pub out: std::path::PathBuf,
    /// Where to write the long-format CSV of per-replication results.
    #[arg(long, default_value = "sim-replications.csv")]
    pub csv: std::path::PathBuf,
}
