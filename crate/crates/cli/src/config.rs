//! Run configuration: a TOML document mirroring the command-line surface.
//! Flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use durprobit::{
    CovariateSpec, DerivedColumn, EstimationSettings, ModelSpec, ParameterVector,
    SimulationConfig,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

/// The `[model]` section.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub duration_covariates: Vec<String>,
    #[serde(default)]
    pub ordinal_covariates: Vec<String>,
    #[serde(default = "default_true")]
    pub include_duration_intercept: bool,
    #[serde(default = "default_bounds")]
    pub category_bounds: Vec<f64>,
    #[serde(default)]
    pub derived: Vec<DerivedColumn>,
}

fn default_true() -> bool {
    true
}

fn default_bounds() -> Vec<f64> {
    vec![1.0, 3.0]
}

/// The `[data]` section.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    /// Subtracted from `departure_raw` when `departure_hours` is absent.
    pub origin_offset: Option<f64>,
}

/// The `[output]` section.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// The `[simulation]` section: truth parameters and covariate generators.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_obs: usize,
    #[serde(default)]
    pub seed: u64,
    pub truth: TruthSection,
    #[serde(default)]
    pub covariates: Vec<CovariateSpec>,
    #[serde(default = "default_true")]
    pub check_category_scheme: bool,
    /// Default replication count for the recover command.
    #[serde(default)]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub mu1: f64,
    pub rho: f64,
}

/// The `[gof]` section.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GofSection {
    pub confidence_levels: Option<Vec<f64>>,
}

/// Whole config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub estimation: Option<EstimationSettings>,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub gof: Option<GofSection>,
}

/// Effective configuration after merging file values and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ModelSpec,
    pub data_path: Option<PathBuf>,
    pub origin_offset: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub simulation: Option<SimulationSection>,
    pub confidence_levels: Vec<f64>,
}

pub const DEFAULT_CONFIDENCE_LEVELS: [f64; 4] = [0.90, 0.95, 0.99, 0.9999];

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::user(format!("cannot read config '{}': {e}", path.display())))?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::user(format!("config '{}': {e}", path.display())))?;

        let spec = ModelSpec {
            duration_covariates: file.model.duration_covariates,
            ordinal_covariates: file.model.ordinal_covariates,
            include_duration_intercept: file.model.include_duration_intercept,
            category_bounds: file.model.category_bounds,
            derived_columns: file.model.derived,
            settings: file.estimation.unwrap_or_default(),
        };
        spec.validate()?;

        let data = file.data.unwrap_or_default();
        let output = file.output.unwrap_or_default();
        Ok(RunConfig {
            spec,
            data_path: data.path,
            origin_offset: data.origin_offset,
            output_path: output.path,
            format: output.format.unwrap_or(OutputFormat::Text),
            simulation: file.simulation,
            confidence_levels: file
                .gof
                .unwrap_or_default()
                .confidence_levels
                .unwrap_or_else(|| DEFAULT_CONFIDENCE_LEVELS.to_vec()),
        })
    }

    /// Assembles the simulation config, applying flag overrides.
    pub fn simulation_config(
        &self,
        seed: Option<u64>,
        n_obs: Option<usize>,
    ) -> Result<SimulationConfig, CliError> {
        let section = self.simulation.as_ref().ok_or_else(|| {
            CliError::user("config has no [simulation] section".to_string())
        })?;
        let theta = ParameterVector::new(
            section.truth.gamma.clone(),
            section.truth.beta.clone(),
            section.truth.sigma,
            section.truth.mu1,
            section.truth.rho,
        )?;
        let config = SimulationConfig {
            spec: self.spec.clone(),
            theta,
            covariates: section.covariates.clone(),
            n_obs: n_obs.unwrap_or(section.n_obs),
            seed: seed.unwrap_or(section.seed),
            check_category_scheme: section.check_category_scheme,
        };
        config.validate()?;
        Ok(config)
    }
}
