//! Synthetic data generation from known parameters, plus Monte Carlo
//! parameter-recovery experiments.
//!
//! Draws follow the generative model forward: covariates per declared
//! generator, correlated standard-normal errors (alpha_std, eps) with
//! corr = rho built by exact composition eps = rho a + sqrt(1 - rho^2) w,
//! then d = exp(gamma.y + sigma alpha_std) and the category from where
//! beta.x + eps falls relative to (0, mu1). All randomness comes from
//! ChaCha streams keyed by a single seed, so one seed yields one dataset on
//! every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::estimate::{estimate, EstimationResult};
use crate::likelihood::ParameterVector;
use crate::model::{Dataset, DesignMatrix, ModelSpec, Observation, INTERCEPT_NAME};

// Seed offset separating the error stream from the covariate stream.
const ERROR_STREAM_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Distribution of one simulated covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovariateGenerator {
    /// 1 with probability `p`, else 0.
    Bernoulli { p: f64 },
    /// Uniform integer on `low..=high`.
    UniformInt { low: i64, high: i64 },
    Normal { mean: f64, std_dev: f64 },
    Constant { value: f64 },
}

impl CovariateGenerator {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Self::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Config(format!(
                        "Bernoulli p for '{name}' must lie in [0, 1], got {p}"
                    )));
                }
            }
            Self::UniformInt { low, high } => {
                if low > high {
                    return Err(Error::Config(format!(
                        "UniformInt bounds for '{name}' are reversed ({low} > {high})"
                    )));
                }
            }
            Self::Normal { std_dev, mean } => {
                if !(std_dev.is_finite() && *std_dev >= 0.0) || !mean.is_finite() {
                    return Err(Error::Config(format!(
                        "Normal parameters for '{name}' are invalid"
                    )));
                }
            }
            Self::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Config(format!(
                        "Constant value for '{name}' must be finite"
                    )));
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            Self::Bernoulli { p } => {
                if rng.gen::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::UniformInt { low, high } => rng.gen_range(*low..=*high) as f64,
            Self::Normal { mean, std_dev } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std_dev * z
            }
            Self::Constant { value } => *value,
        }
    }
}

/// A named covariate generator, in draw order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    #[serde(flatten)]
    pub generator: CovariateGenerator,
}

/// Everything needed to simulate a dataset from known parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub spec: ModelSpec,
    /// True parameters; dimensions must match the spec (intercepts included).
    pub theta: ParameterVector,
    pub covariates: Vec<CovariateSpec>,
    pub n_obs: usize,
    pub seed: u64,
    /// Require the spec's cut-point scheme to produce exactly the three
    /// categories the latent model generates.
    #[serde(default = "default_check")]
    pub check_category_scheme: bool,
}

fn default_check() -> bool {
    true
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.theta.validate()?;
        if self.n_obs == 0 {
            return Err(Error::Config("n_obs must be at least 1".into()));
        }
        if self.check_category_scheme && self.spec.n_categories() != 3 {
            return Err(Error::Config(format!(
                "latent categories are 3 but the cut points declare {}",
                self.spec.n_categories()
            )));
        }
        if !self.spec.derived_columns.is_empty() {
            return Err(Error::Config(
                "simulation generates final columns; derived columns are not supported".into(),
            ));
        }
        if self.theta.gamma.len() != self.spec.n_duration_params()
            || self.theta.beta.len() != self.spec.n_ordinal_params()
        {
            return Err(Error::Config(format!(
                "theta dimensions ({}, {}) do not match the spec ({}, {})",
                self.theta.gamma.len(),
                self.theta.beta.len(),
                self.spec.n_duration_params(),
                self.spec.n_ordinal_params()
            )));
        }
        for cov in &self.covariates {
            cov.generator.validate(&cov.name)?;
        }
        for name in self
            .spec
            .duration_covariates
            .iter()
            .chain(self.spec.ordinal_covariates.iter())
        {
            if !self.covariates.iter().any(|c| &c.name == name) {
                return Err(Error::Config(format!(
                    "no covariate generator declared for '{name}'"
                )));
            }
        }
        Ok(())
    }
}

/// `n` standard bivariate normal pairs with correlation `rho`, built as
/// `(a, rho a + sqrt(1 - rho^2) w)` from independent standard normals.
pub fn draw_correlated_errors(n: usize, rho: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(rho.is_finite() && rho.abs() < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (-1, 1), got {rho}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let scale = (1.0 - rho * rho).sqrt();
    Ok((0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let w: f64 = rng.sample(StandardNormal);
            (a, rho * a + scale * w)
        })
        .collect())
}

/// Simulates a fully formed dataset from the configuration.
pub fn simulate_dataset(config: &SimulationConfig) -> Result<Dataset> {
    config.validate()?;
    let n = config.n_obs;
    let spec = &config.spec;
    let theta = &config.theta;

    let mut cov_rng = ChaCha12Rng::seed_from_u64(config.seed);
    let errors = draw_correlated_errors(
        n,
        theta.rho,
        config.seed.wrapping_add(ERROR_STREAM_OFFSET),
    )?;

    let mut y_names: Vec<String> = Vec::with_capacity(spec.n_duration_params());
    if spec.include_duration_intercept {
        y_names.push(INTERCEPT_NAME.to_string());
    }
    y_names.extend(spec.duration_covariates.iter().cloned());
    let mut x_names: Vec<String> = Vec::with_capacity(spec.n_ordinal_params());
    x_names.push(INTERCEPT_NAME.to_string());
    x_names.extend(spec.ordinal_covariates.iter().cloned());

    let mut observations = Vec::with_capacity(n);
    let mut y_data = Vec::with_capacity(n * y_names.len());
    let mut x_data = Vec::with_capacity(n * x_names.len());
    let mut values = Vec::with_capacity(config.covariates.len());
    for (i, (alpha_std, eps)) in errors.into_iter().enumerate() {
        values.clear();
        for cov in &config.covariates {
            values.push(cov.generator.draw(&mut cov_rng));
        }
        let lookup = |name: &str| -> f64 {
            if name == INTERCEPT_NAME {
                return 1.0;
            }
            let idx = config
                .covariates
                .iter()
                .position(|c| c.name == name)
                .expect("validated generator");
            values[idx]
        };
        let mut gy = 0.0;
        for (name, g) in y_names.iter().zip(&theta.gamma) {
            let v = lookup(name);
            y_data.push(v);
            gy += g * v;
        }
        let mut bx = 0.0;
        for (name, b) in x_names.iter().zip(&theta.beta) {
            let v = lookup(name);
            x_data.push(v);
            bx += b * v;
        }
        let d = (gy + theta.sigma * alpha_std).exp();
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Data(format!(
                "simulated duration overflowed at observation {i} (linear index {gy:.3})"
            )));
        }
        let latent = bx + eps;
        let category = if latent <= 0.0 {
            1
        } else if latent <= theta.mu1 {
            2
        } else {
            3
        };
        observations.push(Observation::new((i + 1).to_string(), d, category));
    }

    Dataset::new(
        observations,
        DesignMatrix::from_raw(y_names, y_data, n),
        DesignMatrix::from_raw(x_names, x_data, n),
    )
}

/// Recovery outcome for one parameter across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecovery {
    pub name: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Std-dev of the estimates across replications (n-1 denominator).
    pub empirical_sd: f64,
    pub mean_reported_se: f64,
    /// empirical_sd / mean_reported_se; near 1 when the SEs are calibrated.
    pub se_ratio: f64,
    /// Replications whose nominal 95% interval covered the truth.
    pub coverage_count: usize,
    pub coverage_n: usize,
}

/// Simulate-estimate replications against a known truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub n_replications: usize,
    /// Replications that converged and produced standard errors.
    pub n_used: usize,
    pub n_failures: usize,
    pub failures: Vec<String>,
    pub parameters: Vec<ParameterRecovery>,
}

/// Runs `replications` simulate-estimate rounds with per-replication seeds
/// `config.seed + r` and summarizes bias, RMSE, SE calibration and coverage.
/// Replications run in parallel; aggregation order is fixed by replication
/// index, so the report is deterministic.
pub fn recovery_experiment(config: &SimulationConfig, replications: usize) -> Result<RecoveryReport> {
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    config.validate()?;

    let outcomes: Vec<std::result::Result<EstimationResult, String>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rep_config = config.clone();
            rep_config.seed = config.seed.wrapping_add(r as u64);
            let data = simulate_dataset(&rep_config).map_err(|e| format!("replication {r}: {e}"))?;
            estimate(&data, &rep_config.spec).map_err(|e| format!("replication {r}: {e}"))
        })
        .collect();

    let mut used: Vec<&EstimationResult> = Vec::new();
    let mut failures = Vec::new();
    for outcome in &outcomes {
        match outcome {
            Ok(result) if result.std_errors.is_some() => used.push(result),
            Ok(result) => failures.push(format!(
                "start {} converged but the Hessian was not positive definite",
                result.convergence.best_start
            )),
            Err(message) => failures.push(message.clone()),
        }
    }
    if used.is_empty() {
        return Err(Error::Convergence(format!(
            "all {replications} replications failed; first: {}",
            failures.first().cloned().unwrap_or_default()
        )));
    }

    let truth = config.theta.to_flat();
    let names = &used[0].parameter_names;
    let z95 = statrs::distribution::Normal::standard().inverse_cdf(0.975);
    let m = used.len() as f64;
    let parameters = (0..truth.len())
        .map(|j| {
            let estimates: Vec<f64> = used.iter().map(|r| r.theta.to_flat()[j]).collect();
            let ses: Vec<f64> = used
                .iter()
                .map(|r| r.std_errors.as_ref().expect("filtered")[j])
                .collect();
            let mean_estimate = estimates.iter().sum::<f64>() / m;
            let bias = mean_estimate - truth[j];
            let rmse = (estimates.iter().map(|e| (e - truth[j]).powi(2)).sum::<f64>() / m).sqrt();
            let empirical_sd = if used.len() > 1 {
                (estimates
                    .iter()
                    .map(|e| (e - mean_estimate).powi(2))
                    .sum::<f64>()
                    / (m - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            let mean_reported_se = ses.iter().sum::<f64>() / m;
            let coverage_count = estimates
                .iter()
                .zip(&ses)
                .filter(|(e, s)| (*e - truth[j]).abs() <= z95 * **s)
                .count();
            ParameterRecovery {
                name: names[j].clone(),
                truth: truth[j],
                mean_estimate,
                bias,
                rmse,
                empirical_sd,
                mean_reported_se,
                se_ratio: empirical_sd / mean_reported_se,
                coverage_count,
                coverage_n: used.len(),
            }
        })
        .collect();

    Ok(RecoveryReport {
        n_replications: replications,
        n_used: used.len(),
        n_failures: failures.len(),
        failures,
        parameters,
    })
}
