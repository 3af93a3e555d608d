//! Declarative simulation configuration, deserializable from JSON.

use crate::SimError;
use cov_structures::{CovStructure, StructureSpec};
use loss_functions::RadialLaw;
use mm_estimators::{FitConfig, LossPair};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Error law of the spherical residual vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    /// Standard normal coordinates.
    Normal,
    /// Multivariate Student with `df` degrees of freedom.
    Student { df: f64 },
}

impl LawSpec {
    /// The matching radial reference law in dimension `k`.
    pub fn radial(&self, k: usize) -> Result<RadialLaw, SimError> {
        let law = match self {
            Self::Normal => RadialLaw::normal(k)?,
            Self::Student { df } => RadialLaw::student(k, *df)?,
        };
        Ok(law)
    }
}

/// How per-unit design matrices are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSpec {
    /// `X_i = I_k`, the location-scatter design (`q = k`).
    Identity,
    /// `q` columns of iid uniform draws on `[low, high]`; when `intercept`
    /// is set the first column is constant one instead.
    Uniform {
        q: usize,
        low: f64,
        high: f64,
        #[serde(default)]
        intercept: bool,
    },
}

impl DesignSpec {
    /// Number of regression coefficients the design produces.
    pub fn n_coef(&self, k: usize) -> usize {
        match self {
            Self::Identity => k,
            Self::Uniform { q, .. } => *q,
        }
    }
}

/// Point-mass contamination applied after clean generation: the responses of
/// the first `floor(fraction * n)` units are replaced by `displacement`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    /// Fraction of units to replace; must lie in `[0, 1)`.
    pub fraction: f64,
    /// Replacement response, one coordinate per response dimension.
    pub displacement: Vec<f64>,
}

/// Loss tuning: the refinement cutoff is always explicit, the scale cutoff
/// comes either directly (`c0`) or via a breakdown target (`target_bdp`,
/// default 0.5). Setting both is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    /// Refinement cutoff `c1`; zero or missing means "equal to `c0`".
    #[serde(default)]
    pub c1: Option<f64>,
    /// Explicit scale cutoff.
    #[serde(default)]
    pub c0: Option<f64>,
    /// Breakdown target for tuning the scale cutoff.
    #[serde(default)]
    pub target_bdp: Option<f64>,
}

impl TuningSpec {
    /// Resolves the cutoffs to a calibrated loss pair in dimension `k`.
    pub fn resolve(&self, k: usize) -> Result<LossPair, SimError> {
        let pair = match (self.c0, self.target_bdp) {
            (Some(_), Some(_)) => {
                return Err(SimError::InvalidConfig {
                    context: "tuning sets both c0 and target_bdp; pick one".into(),
                })
            }
            (Some(c0), None) => LossPair::from_cutoffs(k, c0, self.c1.unwrap_or(c0))?,
            (None, target) => {
                let target = target.unwrap_or(0.5);
                match self.c1 {
                    Some(c1) => LossPair::tuned(k, target, c1)?,
                    None => {
                        // Tune c0 for the breakdown target, then reuse it
                        // as the refinement cutoff.
                        let law = RadialLaw::normal(k)?;
                        let tuned = loss_functions::tune_cutoff(&law, target)?;
                        LossPair::from_cutoffs(k, tuned.c, tuned.c)?
                    }
                }
            }
        };
        Ok(pair)
    }
}

/// Overrides for the fitter's search effort; anything left unset falls back
/// to [`FitConfig::default`]. Simulation studies typically shrink
/// `n_subsets`, since clean replications need far less initial-search effort
/// than a single hostile dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FitOverrides {
    #[serde(default)]
    pub n_subsets: Option<usize>,
    #[serde(default)]
    pub n_finalists: Option<usize>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub score_tol: Option<f64>,
}

impl FitOverrides {
    /// Applies the overrides on top of the defaults, seeding the subset
    /// search with `seed`.
    pub fn build(&self, seed: u64) -> FitConfig {
        let base = FitConfig::default();
        FitConfig {
            n_subsets: self.n_subsets.unwrap_or(base.n_subsets),
            n_finalists: self.n_finalists.unwrap_or(base.n_finalists),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            score_tol: self.score_tol.unwrap_or(base.score_tol),
            seed,
            ..base
        }
    }
}

/// Full description of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Covariance structure of the error vector.
    pub structure: StructureSpec,
    /// True regression coefficients.
    pub beta: Vec<f64>,
    /// True covariance parameters; `V(theta)` must be positive definite.
    pub theta: Vec<f64>,
    /// Error law of the spherical residuals.
    pub law: LawSpec,
    /// Rescale Student draws to unit coordinate variance (requires
    /// `df > 2`); normal draws are unaffected.
    #[serde(default)]
    pub standardize_student: bool,
    /// Per-unit design generator.
    pub design: DesignSpec,
    /// Units per replication.
    pub n: usize,
    /// Number of Monte-Carlo replications.
    pub replications: usize,
    /// Master seed; replication `r` uses stream `r` of this seed.
    pub seed: u64,
    /// Optional point-mass contamination.
    #[serde(default)]
    pub contamination: Option<ContaminationSpec>,
    /// Loss cutoffs for the fitter.
    #[serde(default)]
    pub tuning: TuningSpec,
    /// Fitter effort overrides.
    #[serde(default)]
    pub fit: FitOverrides,
}

impl SimConfig {
    /// Parses a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    /// Materializes the covariance structure and checks every cross-field
    /// invariant that deserialization alone cannot see.
    pub fn validate(&self) -> Result<CovStructure, SimError> {
        let structure = self.structure.build()?;
        let k = structure.dim();
        let q = self.design.n_coef(k);
        if self.beta.len() != q {
            return Err(SimError::InvalidConfig {
                context: format!(
                    "beta has {} entries but the design produces {} coefficients",
                    self.beta.len(),
                    q
                ),
            });
        }
        if self.theta.len() != structure.n_params() {
            return Err(SimError::InvalidConfig {
                context: format!(
                    "theta has {} entries but the structure has {} parameters",
                    self.theta.len(),
                    structure.n_params()
                ),
            });
        }
        let theta = DVector::from_column_slice(&self.theta);
        if !structure.is_positive_definite_at(&theta) {
            return Err(SimError::InvalidConfig {
                context: "V(theta) is not positive definite".into(),
            });
        }
        if self.n < k + q + 1 {
            return Err(SimError::InvalidConfig {
                context: format!(
                    "n = {} is too small; need at least k + q + 1 = {}",
                    self.n,
                    k + q + 1
                ),
            });
        }
        if self.replications == 0 {
            return Err(SimError::InvalidConfig {
                context: "replications must be positive".into(),
            });
        }
        if let LawSpec::Student { df } = self.law {
            if !(df > 0.0) {
                return Err(SimError::InvalidConfig {
                    context: format!("student df must be positive, got {df}"),
                });
            }
            if self.standardize_student && df <= 2.0 {
                return Err(SimError::InvalidConfig {
                    context: format!(
                        "student draws with df = {df} have no finite variance to standardize"
                    ),
                });
            }
        }
        if let DesignSpec::Uniform { q, low, high, .. } = self.design {
            if q == 0 {
                return Err(SimError::InvalidConfig {
                    context: "uniform design needs at least one column".into(),
                });
            }
            if !(low < high) {
                return Err(SimError::InvalidConfig {
                    context: format!("uniform design bounds [{low}, {high}] are empty"),
                });
            }
        }
        if let Some(c) = &self.contamination {
            if !(0.0..1.0).contains(&c.fraction) {
                return Err(SimError::InvalidConfig {
                    context: format!(
                        "contamination fraction must lie in [0, 1), got {}",
                        c.fraction
                    ),
                });
            }
            if c.displacement.len() != k {
                return Err(SimError::InvalidConfig {
                    context: format!(
                        "contamination displacement has {} coordinates, expected {}",
                        c.displacement.len(),
                        k
                    ),
                });
            }
        }
        Ok(structure)
    }

    /// True coefficients as a vector.
    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }

    /// True covariance parameters as a vector.
    pub fn theta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.theta)
    }
}
