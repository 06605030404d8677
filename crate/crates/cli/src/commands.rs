//! Command implementations. Each returns the rendered report text so the
//! caller can print it and optionally mirror it to a file byte-for-byte.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use durprobit::{
    continuous_heterogeneity, estimate, fit_report, iqv, marginal_effects, recovery_experiment,
    simulate_dataset, AttributeValue, DurationScale, EgoNetwork,
};

use crate::cli::DurationScaleArg;
use crate::config::{OutputFormat, RunConfig, DEFAULT_CONFIDENCE_LEVELS};
use crate::data::{load_csv, write_csv};
use crate::error::CliError;
use crate::report::{
    recovery_to_text, DroppedRowReport, EffectsReport, EgoMetricsRow, EstimateReport, GofReport,
    NetMetricsReport, ADJUSTED_RHO2_FOOTNOTE,
};
use crate::rosters::load_rosters;

fn emit(text: String, out: Option<&Path>) -> Result<(), CliError> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text.as_bytes())?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn run_estimate(
    data: Option<PathBuf>,
    config_path: &Path,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    origin: Option<f64>,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let data_path = data
        .or_else(|| config.data_path.clone())
        .ok_or_else(|| CliError::user("no dataset: pass --data or set [data].path"))?;
    let origin = origin.or(config.origin_offset);
    let format = format.unwrap_or(config.format);

    let loaded = load_csv(&data_path, &config.spec, origin)?;
    let result = estimate(&loaded.dataset, &config.spec)?;
    let fit = fit_report(
        result.ll_converged,
        result.ll_restricted,
        result.k_adjustment,
        Some(result.n_obs),
        &config.confidence_levels,
    )?;
    let report = EstimateReport {
        spec: config.spec.clone(),
        data_path: data_path.display().to_string(),
        n_input_rows: loaded.n_input_rows,
        dropped: loaded
            .dropped
            .iter()
            .map(|d| DroppedRowReport {
                line: d.line,
                id: d.id.clone(),
                reason: d.reason.clone(),
            })
            .collect(),
        result,
        fit,
        footnote: ADJUSTED_RHO2_FOOTNOTE.to_string(),
    };
    let text = match format {
        OutputFormat::Text => report.to_text(),
        OutputFormat::Json => to_json(&report)?,
    };
    emit(text, out.as_deref().or(config.output_path.as_deref()))
}

pub fn run_simulate(
    config_path: &Path,
    seed: Option<u64>,
    n: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let sim = config.simulation_config(seed, n)?;
    let dataset = simulate_dataset(&sim)?;
    write_csv(&dataset, out)?;
    println!(
        "wrote {} observations ({} duration, {} ordinal columns) to {}",
        dataset.n_obs(),
        dataset.y().ncols(),
        dataset.x().ncols(),
        out.display()
    );
    Ok(())
}

pub fn run_effects(
    result_path: &Path,
    data_path: &Path,
    duration_scale: Option<DurationScaleArg>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    origin: Option<f64>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(result_path).map_err(|e| {
        CliError::user(format!("cannot read result '{}': {e}", result_path.display()))
    })?;
    let saved: EstimateReport = serde_json::from_str(&text).map_err(|e| {
        CliError::user(format!(
            "'{}' is not an estimation result in JSON format: {e}",
            result_path.display()
        ))
    })?;
    let loaded = load_csv(data_path, &saved.spec, origin)?;
    let scale = duration_scale
        .map(DurationScale::from)
        .unwrap_or_default();
    let effects = marginal_effects(&loaded.dataset, &saved.result.theta, scale)?;
    let report = EffectsReport { effects };
    let text = match format.unwrap_or(OutputFormat::Text) {
        OutputFormat::Text => report.to_text(),
        OutputFormat::Json => to_json(&report)?,
    };
    emit(text, out.as_deref())
}

pub fn run_gof(
    llb: f64,
    llr: f64,
    k: usize,
    n_obs: Option<usize>,
    confidence_levels: &[f64],
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
) -> Result<(), CliError> {
    let levels = if confidence_levels.is_empty() {
        DEFAULT_CONFIDENCE_LEVELS.to_vec()
    } else {
        confidence_levels.to_vec()
    };
    let fit = fit_report(llb, llr, k, n_obs, &levels)?;
    let report = GofReport {
        fit,
        footnote: ADJUSTED_RHO2_FOOTNOTE.to_string(),
    };
    let text = match format.unwrap_or(OutputFormat::Text) {
        OutputFormat::Text => report.to_text(),
        OutputFormat::Json => to_json(&report)?,
    };
    emit(text, out.as_deref())
}

pub fn run_netmetrics(
    rosters_path: &Path,
    categories: Option<usize>,
    continuous: &[String],
    categorical: &[String],
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
) -> Result<(), CliError> {
    let networks = load_rosters(rosters_path)?;
    let (continuous, categorical) =
        classify_attributes(&networks, continuous, categorical)?;

    let egos = networks
        .iter()
        .map(|network| {
            let mut metrics = std::collections::BTreeMap::new();
            for attr in &continuous {
                let het = continuous_heterogeneity(network, attr);
                metrics.insert(format!("het:{attr}"), het.value);
            }
            for attr in &categorical {
                let result = iqv(network, attr, categories)?;
                metrics.insert(format!("iqv:{attr}"), result.value);
            }
            Ok(EgoMetricsRow {
                ego_id: network.ego_id.clone(),
                network_size: network.network_size(),
                metrics,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = NetMetricsReport {
        continuous_attributes: continuous,
        categorical_attributes: categorical,
        egos,
    };
    let text = match format.unwrap_or(OutputFormat::Text) {
        OutputFormat::Text => report.to_text(),
        OutputFormat::Json => to_json(&report)?,
    };
    emit(text, out.as_deref())
}

// Attributes not explicitly assigned are continuous when every observed
// value is numeric, categorical otherwise.
fn classify_attributes(
    networks: &[EgoNetwork],
    continuous_flags: &[String],
    categorical_flags: &[String],
) -> Result<(Vec<String>, Vec<String>), CliError> {
    let mut continuous: BTreeSet<String> = continuous_flags.iter().cloned().collect();
    let mut categorical: BTreeSet<String> = categorical_flags.iter().cloned().collect();
    if let Some(both) = continuous.intersection(&categorical).next() {
        return Err(CliError::user(format!(
            "attribute '{both}' declared both continuous and categorical"
        )));
    }
    let mut observed: BTreeSet<String> = BTreeSet::new();
    let mut has_label: BTreeSet<String> = BTreeSet::new();
    for network in networks {
        for alter in &network.alters {
            for (name, value) in alter {
                observed.insert(name.clone());
                if matches!(value, AttributeValue::Label(_)) {
                    has_label.insert(name.clone());
                }
            }
        }
    }
    for name in observed {
        if continuous.contains(&name) || categorical.contains(&name) {
            continue;
        }
        if has_label.contains(&name) {
            categorical.insert(name);
        } else {
            continuous.insert(name);
        }
    }
    Ok((
        continuous.into_iter().collect(),
        categorical.into_iter().collect(),
    ))
}

pub fn run_recover(
    config_path: &Path,
    reps: Option<usize>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let reps = reps
        .or_else(|| config.simulation.as_ref().and_then(|s| s.replications))
        .ok_or_else(|| {
            CliError::user("no replication count: pass --reps or set [simulation].replications")
        })?;
    let sim = config.simulation_config(None, None)?;
    let report = recovery_experiment(&sim, reps)?;
    let text = match format.unwrap_or(config.format) {
        OutputFormat::Text => recovery_to_text(&report),
        OutputFormat::Json => to_json(&report)?,
    };
    emit(text, out.as_deref().or(config.output_path.as_deref()))
}
