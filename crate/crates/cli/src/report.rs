//! Report rendering: plain-text tables and JSON documents carrying the same
//! numbers. Text output rounds to 6 significant digits; JSON keeps full
//! precision and round-trips through serde.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use durprobit::{
    EstimationResult, FitReport, MarginalEffectsReport, ModelSpec, RecoveryReport,
};

pub const ADJUSTED_RHO2_FOOTNOTE: &str = "note: adjusted rho^2 uses 1 - (LL(beta) - K) / LL(r) \
exactly; quoted goodness-of-fit tables sometimes round this statistic to one decimal (e.g. \
0.0635 -> 0.1), so small differences from published summaries are expected.";

/// Six significant digits; plain notation for moderate magnitudes,
/// scientific otherwise.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: &[String], out: &mut String| {
        for (j, cell) in cells.iter().enumerate() {
            if j == 0 {
                out.push_str(&format!("{:<width$}", cell, width = widths[0]));
            } else {
                out.push_str(&format!("  {:>width$}", cell, width = widths[j]));
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    render_row(
        &headers.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        &mut out,
    );
    for row in rows {
        render_row(row, &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRowReport {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

/// Full estimation report: the spec it was run under, ingestion notes, the
/// estimation result and the fit block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub spec: ModelSpec,
    pub data_path: String,
    pub n_input_rows: usize,
    pub dropped: Vec<DroppedRowReport>,
    pub result: EstimationResult,
    pub fit: FitReport,
    pub footnote: String,
}

impl EstimateReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("Joint duration / ordinal-outcome model\n");
        out.push_str("======================================\n");
        out.push_str(&format!("data: {}\n", self.data_path));
        out.push_str(&format!(
            "observations: {} (input rows: {}, dropped: {})\n",
            self.result.n_obs,
            self.n_input_rows,
            self.dropped.len()
        ));
        for drop in &self.dropped {
            out.push_str(&format!(
                "  dropped line {} (id '{}'): {}\n",
                drop.line, drop.id, drop.reason
            ));
        }
        let conv = &self.result.convergence;
        out.push_str(&format!(
            "convergence: {} ({:?}, start {} of {}, {} iterations, gradient norm {})\n",
            if conv.converged { "yes" } else { "no" },
            conv.reason,
            conv.best_start + 1,
            conv.starts.len(),
            conv.iterations,
            sig6(conv.gradient_norm)
        ));
        if self.result.diagnostics.underflow_count > 0 {
            out.push_str(&format!(
                "underflow-floored observations at the optimum: {}\n",
                self.result.diagnostics.underflow_count
            ));
        }
        if let Some(cond) = self.result.diagnostics.hessian_condition_number {
            out.push_str(&format!("hessian condition number: {}\n", sig6(cond)));
        }
        if self.result.std_errors.is_none() {
            out.push_str(
                "standard errors unavailable: Hessian not positive definite at the optimum",
            );
            if let Some(eig) = self.result.diagnostics.hessian_min_eigenvalue {
                out.push_str(&format!(" (smallest eigenvalue {})", sig6(eig)));
            }
            out.push('\n');
        }
        out.push('\n');

        let p = self.result.theta.gamma.len();
        let q = self.result.theta.beta.len();
        let flat = self.result.theta.to_flat();
        let row = |j: usize, label: &str| -> Vec<String> {
            let se = self.result.std_errors.as_ref().map(|s| s[j]);
            let t = self.result.t_stats.as_ref().map(|t| t[j]);
            vec![
                label.to_string(),
                sig6(flat[j]),
                se.map_or_else(|| "-".into(), sig6),
                t.map_or_else(|| "-".into(), sig6),
            ]
        };
        let headers = ["variable", "coefficient", "std. error", "t-stat"];

        out.push_str("Duration equation (log-hours)\n");
        let rows: Vec<Vec<String>> = (0..p)
            .map(|j| {
                row(
                    j,
                    self.result.parameter_names[j].trim_start_matches("duration:"),
                )
            })
            .collect();
        out.push_str(&render_table(&headers, &rows));
        out.push('\n');

        out.push_str("Ordinal equation (latent index)\n");
        let rows: Vec<Vec<String>> = (0..q)
            .map(|j| {
                row(
                    p + j,
                    self.result.parameter_names[p + j].trim_start_matches("ordinal:"),
                )
            })
            .collect();
        out.push_str(&render_table(&headers, &rows));
        out.push('\n');

        out.push_str("Ancillary parameters\n");
        let rows: Vec<Vec<String>> = (0..3)
            .map(|i| row(p + q + i, &self.result.parameter_names[p + q + i].clone()))
            .collect();
        out.push_str(&render_table(&headers, &rows));
        out.push('\n');

        out.push_str(&fit_block(&self.fit));
        out.push_str(&format!("{}\n", self.footnote));
        out
    }
}

pub fn fit_block(fit: &FitReport) -> String {
    let mut out = String::new();
    out.push_str("Goodness of fit\n");
    let mut rows = vec![
        vec![
            "log-likelihood at convergence LL(beta)".to_string(),
            sig6(fit.ll_converged),
        ],
        vec![
            "restricted log-likelihood LL(r)".to_string(),
            sig6(fit.ll_restricted),
        ],
        vec![
            "parameters for adjustment K".to_string(),
            fit.k.to_string(),
        ],
    ];
    if let Some(n) = fit.n_obs {
        rows.push(vec!["observations".to_string(), n.to_string()]);
    }
    rows.push(vec![
        format!("likelihood ratio chi^2 ({} dof)", fit.chi2_dof),
        sig6(fit.chi2),
    ]);
    rows.push(vec!["adjusted rho^2".to_string(), sig6(fit.adjusted_rho2)]);
    out.push_str(&render_table(&["measure", "value"], &rows));
    for cmp in &fit.comparisons {
        out.push_str(&format!(
            "  chi^2 {} the {}% critical value {}\n",
            if cmp.exceeds { "exceeds" } else { "does not exceed" },
            sig6(cmp.confidence * 100.0),
            sig6(cmp.critical_value)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub fit: FitReport,
    pub footnote: String,
}

impl GofReport {
    pub fn to_text(&self) -> String {
        format!("{}{}\n", fit_block(&self.fit), self.footnote)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsReport {
    pub effects: MarginalEffectsReport,
}

impl EffectsReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Average marginal effects (duration scale: {:?})\n\n",
            self.effects.duration_scale
        ));
        out.push_str("Duration equation: effect on expected departure time (hours)\n");
        let rows: Vec<Vec<String>> = self
            .effects
            .duration_effects
            .iter()
            .map(|e| {
                vec![
                    e.covariate.clone(),
                    sig6(e.effect_hours),
                    format!("{:?}", e.method),
                ]
            })
            .collect();
        out.push_str(&render_table(&["variable", "effect (hours)", "method"], &rows));
        out.push('\n');
        out.push_str("Ordinal equation: effect on category probabilities\n");
        let rows: Vec<Vec<String>> = self
            .effects
            .ordinal_effects
            .iter()
            .map(|e| {
                vec![
                    e.covariate.clone(),
                    sig6(e.effects[0]),
                    sig6(e.effects[1]),
                    sig6(e.effects[2]),
                    format!("{:?}", e.method),
                ]
            })
            .collect();
        out.push_str(&render_table(
            &["variable", "d P(cat 1)", "d P(cat 2)", "d P(cat 3)", "method"],
            &rows,
        ));
        out
    }
}

/// Per-ego network metrics; metric keys are `size`, `het:<attr>`, `iqv:<attr>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetMetricsReport {
    pub continuous_attributes: Vec<String>,
    pub categorical_attributes: Vec<String>,
    pub egos: Vec<EgoMetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoMetricsRow {
    pub ego_id: String,
    pub network_size: usize,
    pub metrics: BTreeMap<String, Option<f64>>,
}

impl NetMetricsReport {
    pub fn to_text(&self) -> String {
        let mut headers: Vec<String> = vec!["ego_id".into(), "size".into()];
        let mut keys: Vec<String> = Vec::new();
        for attr in &self.continuous_attributes {
            keys.push(format!("het:{attr}"));
        }
        for attr in &self.categorical_attributes {
            keys.push(format!("iqv:{attr}"));
        }
        headers.extend(keys.iter().cloned());
        let rows: Vec<Vec<String>> = self
            .egos
            .iter()
            .map(|ego| {
                let mut row = vec![ego.ego_id.clone(), ego.network_size.to_string()];
                for key in &keys {
                    row.push(match ego.metrics.get(key) {
                        Some(Some(v)) => sig6(*v),
                        _ => "-".into(),
                    });
                }
                row
            })
            .collect();
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        render_table(&header_refs, &rows)
    }
}

pub fn recovery_to_text(report: &RecoveryReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Parameter recovery: {} replications, {} used, {} failures\n",
        report.n_replications, report.n_used, report.n_failures
    ));
    for failure in &report.failures {
        out.push_str(&format!("  failure: {failure}\n"));
    }
    let rows: Vec<Vec<String>> = report
        .parameters
        .iter()
        .map(|p| {
            vec![
                p.name.clone(),
                sig6(p.truth),
                sig6(p.mean_estimate),
                sig6(p.bias),
                sig6(p.rmse),
                sig6(p.empirical_sd),
                sig6(p.mean_reported_se),
                sig6(p.se_ratio),
                format!("{}/{}", p.coverage_count, p.coverage_n),
            ]
        })
        .collect();
    out.push_str(&render_table(
        &[
            "parameter",
            "truth",
            "mean est.",
            "bias",
            "rmse",
            "emp. sd",
            "mean SE",
            "sd/SE",
            "95% coverage",
        ],
        &rows,
    ));
    out
}
