//! Command-line surface.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "durprobit",
    version,
    about = "Joint lognormal-duration / ordered-probit model estimated by full-information \
             maximum likelihood"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DurationScaleArg {
    /// Effects on the lognormal mean exp(gamma.y + sigma^2/2).
    Mean,
    /// Effects on the lognormal median exp(gamma.y).
    Median,
}

impl From<DurationScaleArg> for durprobit::DurationScale {
    fn from(arg: DurationScaleArg) -> Self {
        match arg {
            DurationScaleArg::Mean => Self::Mean,
            DurationScaleArg::Median => Self::Median,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the joint model from a CSV dataset.
    Estimate {
        /// Dataset CSV; overrides [data].path from the config.
        #[arg(long)]
        data: Option<PathBuf>,
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Origin subtracted from departure_raw when departure_hours is absent.
        #[arg(long)]
        origin: Option<f64>,
    },
    /// Simulate a dataset from the configured true parameters.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides [simulation].seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides [simulation].n_obs.
        #[arg(long)]
        n: Option<usize>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Average marginal effects from a saved estimation result (JSON).
    Effects {
        /// JSON report produced by `estimate --format json`.
        #[arg(long)]
        result: PathBuf,
        /// Dataset CSV to average the effects over.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        duration_scale: Option<DurationScaleArg>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        #[arg(long)]
        origin: Option<f64>,
    },
    /// Goodness-of-fit block from supplied log-likelihood values.
    Gof {
        /// Log-likelihood at convergence, LL(beta).
        #[arg(long, allow_hyphen_values = true)]
        llb: f64,
        /// Restricted log-likelihood, LL(r).
        #[arg(long, allow_hyphen_values = true)]
        llr: f64,
        /// Number of parameters for adjustment.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n_obs: Option<usize>,
        /// Confidence levels for critical-value comparisons (repeatable).
        #[arg(long = "confidence")]
        confidence_levels: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Per-ego network metrics from a long-format roster CSV.
    Netmetrics {
        /// Roster CSV: ego_id, alter_index, attribute, value.
        #[arg(long)]
        rosters: PathBuf,
        /// Declared category count for IQV attributes.
        #[arg(long)]
        categories: Option<usize>,
        /// Treat these attributes as continuous (repeatable); default:
        /// attributes whose observed values are all numeric.
        #[arg(long)]
        continuous: Vec<String>,
        /// Treat these attributes as categorical (repeatable).
        #[arg(long)]
        categorical: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Monte Carlo parameter-recovery experiment.
    Recover {
        #[arg(long)]
        config: PathBuf,
        /// Number of simulate-estimate replications; falls back to
        /// [simulation].replications from the config.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
}
