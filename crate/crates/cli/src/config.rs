//! Run configuration: a single JSON document validated against the module
//! preconditions before any computation starts. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use sigmak_core::{beta0, RadialGrid, SigmaProblem, SolverParams, WarpedBackground};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub beta: BetaSpec,
    pub background: BackgroundConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Either a literal positive constant or the token "beta0", which resolves
/// through the model constant for (n, k) at run time.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Token(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundConfig {
    pub family: String,
    #[serde(default)]
    pub a: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub t_max: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn background(&self) -> Result<WarpedBackground, CliError> {
        match self.background.family.as_str() {
            "hyperbolic" => {
                if self.background.a.unwrap_or(0.0) != 0.0 {
                    return Err(CliError::Usage(
                        "background.a must be absent or 0 for the hyperbolic family".into(),
                    ));
                }
                WarpedBackground::hyperbolic(self.n).map_err(CliError::usage_from_core)
            }
            "perturbed" => {
                let a = self.background.a.ok_or_else(|| {
                    CliError::Usage("background.a is required for the perturbed family".into())
                })?;
                WarpedBackground::perturbed(self.n, a).map_err(CliError::usage_from_core)
            }
            other => Err(CliError::Usage(format!(
                "background.family must be \"hyperbolic\" or \"perturbed\", got \"{other}\""
            ))),
        }
    }

    pub fn resolve_beta(&self) -> Result<f64, CliError> {
        match &self.beta {
            BetaSpec::Value(v) => {
                if v.is_nan() || *v <= 0.0 {
                    return Err(CliError::Usage(format!("beta must be positive, got {v}")));
                }
                Ok(*v)
            }
            BetaSpec::Token(tok) if tok == "beta0" => {
                beta0(self.n, self.k).map_err(CliError::usage_from_core)
            }
            BetaSpec::Token(tok) => Err(CliError::Usage(format!(
                "beta must be a positive number or the token \"beta0\", got \"{tok}\""
            ))),
        }
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>, CliError> {
        RadialGrid::new(self.grid.t_max, self.grid.n).map_err(CliError::usage_from_core)
    }

    pub fn problem(&self) -> Result<SigmaProblem, CliError> {
        let bg = self.background()?;
        let grid = self.grid()?;
        let beta = self.resolve_beta()?;
        SigmaProblem::new(bg, grid, self.k, beta).map_err(CliError::usage_from_core)
    }

    pub fn solver_params(&self) -> Result<SolverParams, CliError> {
        let mut params = SolverParams::default();
        if let Some(tol) = self.solver.tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(CliError::Usage(format!("solver.tol must be positive, got {tol}")));
            }
            params.tol = tol;
        }
        if let Some(max_iter) = self.solver.max_iter {
            if max_iter == 0 {
                return Err(CliError::Usage("solver.max_iter must be at least 1".into()));
            }
            params.max_iter = max_iter;
        }
        Ok(params)
    }

    /// Output directory: SIGMAK_OUTPUT_DIR overrides the config value,
    /// which defaults to the working directory.
    pub fn output_dir(&self) -> PathBuf {
        resolve_output_dir(self.output_dir.clone())
    }
}

pub fn resolve_output_dir(configured: Option<PathBuf>) -> PathBuf {
    if let Ok(dir) = std::env::var("SIGMAK_OUTPUT_DIR") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    configured.unwrap_or_else(|| PathBuf::from("."))
}
