//! Config file schema, flag overrides and validation into a typed plan.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use altbm_core::exp_alt::{ExpAltParams, StartMode};
use altbm_core::map_alt::MapParams;
use altbm_core::numerics::{Matrix, DEFAULT_INVERSION_TERMS};

use crate::CliError;

/// Raw configuration document; a single JSON object. Command-line flags
/// override `seed`, `output_dir` and `workers`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub construction: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laplace_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laplace_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub b: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Generator,
    Correlation,
    Laplace,
    Converge,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Generator => "generator",
            CommandKind::Correlation => "correlation",
            CommandKind::Laplace => "laplace",
            CommandKind::Converge => "converge",
        }
    }
}

/// Which stochastic construction an experiment runs on.
#[derive(Debug, Clone)]
pub enum Construction {
    Standard,
    ExpAlt(ExpAltParams),
    MapAlt { map: MapParams, gamma: Option<f64> },
}

impl Construction {
    pub fn name(&self) -> &'static str {
        match self {
            Construction::Standard => "standard",
            Construction::ExpAlt(_) => "exp-alt",
            Construction::MapAlt { .. } => "map-alt",
        }
    }
}

/// Fully validated experiment plan.
pub struct Plan {
    pub command: CommandKind,
    pub seed: u64,
    pub construction: Construction,
    pub lambda: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub epochs: Option<usize>,
    pub t_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub replications: u64,
    pub output_dir: PathBuf,
    pub formats: Formats,
    pub workers: usize,
    pub laplace_terms: usize,
    pub laplace_tolerance: f64,
    /// Resolved config echoed into the manifest.
    pub resolved: ConfigFile,
}

#[derive(Debug, Clone, Copy)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError::config(message.into())
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
        return Err(config_err(format!("{what} must be a square matrix")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(config_err(format!("{what} has a non-finite entry")));
    }
    Ok(Matrix::from_rows(rows))
}

fn positive_grid(grid: &[f64], what: &str) -> Result<Vec<f64>, CliError> {
    if grid.is_empty() {
        return Err(config_err(format!("{what} must be nonempty")));
    }
    if grid.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(config_err(format!("{what} entries must be positive")));
    }
    Ok(grid.to_vec())
}

impl ConfigFile {
    /// Validates the configuration for `command` into a typed plan. Flags
    /// already applied by the caller.
    pub fn into_plan(mut self, command: CommandKind) -> Result<Plan, CliError> {
        if let Some(declared) = &self.command {
            if declared != command.name() {
                return Err(config_err(format!(
                    "config declares command '{declared}' but '{}' was invoked",
                    command.name()
                )));
            }
        }
        self.command = Some(command.name().to_string());

        let construction = match self.construction.as_str() {
            "standard" => Construction::Standard,
            "exp-alt" => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| config_err("exp-alt requires 'alpha'"))?;
                let beta = self
                    .beta
                    .ok_or_else(|| config_err("exp-alt requires 'beta'"))?;
                let start = match self.start.as_deref().unwrap_or("synchronized") {
                    "synchronized" => StartMode::Synchronized,
                    "desynchronized" => StartMode::Desynchronized,
                    other => {
                        return Err(config_err(format!(
                            "unknown start mode '{other}' (use synchronized|desynchronized)"
                        )))
                    }
                };
                let params =
                    ExpAltParams::new(alpha, beta, start).map_err(|e| config_err(e.to_string()))?;
                Construction::ExpAlt(params)
            }
            "map-alt" => {
                let map_config = self
                    .map
                    .as_ref()
                    .ok_or_else(|| config_err("map-alt requires 'map' with b, c, d"))?;
                let c = matrix_from_rows(&map_config.c, "map.c")?;
                let d = matrix_from_rows(&map_config.d, "map.d")?;
                if map_config.b.len() != c.rows() {
                    return Err(config_err("map.b length must match the matrix dimension"));
                }
                if map_config.b.iter().any(|x| !x.is_finite()) {
                    return Err(config_err("map.b has a non-finite entry"));
                }
                let map = MapParams::new(map_config.b.clone(), c, d)
                    .map_err(|e| config_err(e.to_string()))?;
                Construction::MapAlt {
                    map,
                    gamma: self.gamma,
                }
            }
            other => {
                return Err(config_err(format!(
                    "unknown construction '{other}' (use standard|exp-alt|map-alt)"
                )))
            }
        };

        let formats = {
            let names = self
                .formats
                .clone()
                .unwrap_or_else(|| vec!["csv".into(), "json".into()]);
            let mut formats = Formats {
                csv: false,
                json: false,
                svg: false,
            };
            for name in &names {
                match name.as_str() {
                    "csv" => formats.csv = true,
                    "json" => formats.json = true,
                    "svg" => formats.svg = true,
                    other => {
                        return Err(config_err(format!(
                            "unknown format '{other}' (use csv|json|svg)"
                        )))
                    }
                }
            }
            if !(formats.csv || formats.json || formats.svg) {
                return Err(config_err("formats must not be empty"));
            }
            formats
        };

        let t_grid = match &self.t_grid {
            Some(grid) => positive_grid(grid, "t_grid")?,
            None => vec![0.25, 0.5, 1.0, 2.0, 4.0],
        };
        let q_grid = match &self.q_grid {
            Some(grid) => positive_grid(grid, "q_grid")?,
            None => vec![0.1, 0.5, 1.0, 5.0, 10.0],
        };

        let plan = Plan {
            command,
            seed: self.seed.unwrap_or(0),
            lambda: self.lambda,
            lambdas: self.lambdas.clone(),
            horizon: self.horizon,
            epochs: self.epochs,
            t_grid,
            q_grid,
            replications: self.replications.unwrap_or(100_000),
            output_dir: PathBuf::from(self.output_dir.clone().unwrap_or_else(|| "out".into())),
            formats,
            workers: self.workers.unwrap_or(0),
            laplace_terms: self.laplace_terms.unwrap_or(DEFAULT_INVERSION_TERMS),
            laplace_tolerance: self.laplace_tolerance.unwrap_or(1e-7),
            construction,
            resolved: self.clone(),
        };
        plan.validate_for_command()?;
        Ok(plan)
    }
}

impl Plan {
    fn validate_for_command(&self) -> Result<(), CliError> {
        if self.laplace_tolerance <= 0.0 || self.laplace_tolerance.is_nan() {
            return Err(config_err("laplace_tolerance must be positive"));
        }
        if self.laplace_terms < 9 {
            return Err(config_err("laplace_terms must be at least 9"));
        }
        match self.command {
            CommandKind::Simulate => {
                self.require_lambda()?;
                if self.horizon.is_none() && self.epochs.is_none() {
                    return Err(config_err("simulate requires 'horizon' or 'epochs'"));
                }
            }
            CommandKind::Generator => {
                self.require_lambda()?;
                if matches!(self.construction, Construction::Standard) && self.lambda.is_none() {
                    return Err(config_err("generator requires 'lambda'"));
                }
            }
            CommandKind::Correlation => {
                if matches!(self.construction, Construction::Standard) {
                    return Err(config_err(
                        "correlation needs an alternating construction (exp-alt or map-alt)",
                    ));
                }
                if self.replications < 1000 {
                    return Err(config_err("correlation requires replications >= 1000"));
                }
            }
            CommandKind::Laplace => {
                if matches!(self.construction, Construction::Standard) {
                    return Err(config_err(
                        "laplace needs an alternating construction (exp-alt or map-alt)",
                    ));
                }
            }
            CommandKind::Converge => {
                let lambdas = self
                    .lambdas
                    .as_ref()
                    .ok_or_else(|| config_err("converge requires 'lambdas'"))?;
                if lambdas.len() < 3 || !lambdas.windows(2).all(|w| w[0] < w[1]) {
                    return Err(config_err(
                        "converge requires at least three strictly increasing lambdas",
                    ));
                }
                let minimum = self.minimum_rate();
                if lambdas.iter().any(|&l| l < minimum) {
                    return Err(config_err(format!(
                        "every lambda must be at least {minimum} for this construction"
                    )));
                }
                if self.horizon.is_none() {
                    return Err(config_err("converge requires 'horizon'"));
                }
                if self.replications < 2 {
                    return Err(config_err("converge requires replications >= 2"));
                }
            }
        }
        Ok(())
    }

    fn require_lambda(&self) -> Result<(), CliError> {
        let lambda = self.lambda.ok_or_else(|| config_err("requires 'lambda'"))?;
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(config_err("'lambda' must be positive"));
        }
        let minimum = self.minimum_rate();
        if !matches!(self.command, CommandKind::Generator) && lambda < minimum {
            return Err(config_err(format!(
                "'lambda' must be at least {minimum} for this construction"
            )));
        }
        Ok(())
    }

    /// Coarsest admissible simulation rate for the chosen construction.
    pub fn minimum_rate(&self) -> f64 {
        match &self.construction {
            Construction::Standard => 0.0,
            Construction::ExpAlt(params) => params.base_rate(),
            Construction::MapAlt { map, gamma } => {
                2.0 * map.max_diagonal().max(gamma.unwrap_or(0.0))
            }
        }
    }

    /// Compact single-line parameter summary used as a metadata column.
    pub fn params_summary(&self) -> String {
        match &self.construction {
            Construction::Standard => "standard".to_string(),
            Construction::ExpAlt(p) => format!(
                "exp-alt alpha={} beta={} start={}",
                p.alpha,
                p.beta,
                match p.start {
                    StartMode::Synchronized => "sync",
                    StartMode::Desynchronized => "desync",
                }
            ),
            Construction::MapAlt { map, gamma } => {
                let gamma = gamma.map(|g| format!(" gamma={g}")).unwrap_or_default();
                format!(
                    "map-alt b={:?} c={:?} d={:?}{gamma}",
                    map.b(),
                    map.c().to_rows(),
                    map.d().to_rows()
                )
            }
        }
    }
}
