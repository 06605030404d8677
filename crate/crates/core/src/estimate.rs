//! Full-information maximum likelihood estimation of the joint model.
//!
//! The constrained parameters are searched through the smooth bijection
//! `(gamma, beta, ln sigma, ln mu1, atanh rho)`, which keeps quasi-Newton
//! ascent unconstrained while sigma > 0, mu1 > 0 and |rho| < 1 hold by
//! construction. Estimation runs from several starts: a heuristic start
//! (least squares for the duration equation, category frequencies for the
//! ordinal intercept and threshold) plus seeded Gaussian perturbations.
//! Standard errors come from the inverse of the numerical Hessian of the
//! negative log-likelihood, computed in the original coordinates so they are
//! directly comparable to reported coefficient tables.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::likelihood::{
    log_likelihood_gradient_original, log_likelihood_with_gradient, total_log_likelihood,
    ParameterVector,
};
use crate::model::{Dataset, ModelSpec};
use crate::optim::{self, BfgsOptions, StopReason};

/// Maps a valid parameter vector onto unconstrained coordinates
/// `(gamma, beta, ln sigma, ln mu1, atanh rho)`.
pub fn reparameterize(theta: &ParameterVector) -> Result<Vec<f64>> {
    theta.validate()?;
    let mut z = theta.to_flat();
    let n = z.len();
    z[n - 3] = z[n - 3].ln();
    z[n - 2] = z[n - 2].ln();
    z[n - 1] = z[n - 1].atanh();
    Ok(z)
}

/// Inverse of [`reparameterize`]; `p` and `q` give the coefficient counts.
pub fn inverse_reparameterize(z: &[f64], p: usize, q: usize) -> Result<ParameterVector> {
    if z.len() != p + q + 3 {
        return Err(Error::Domain(format!(
            "reparameterized vector has length {}, expected {}",
            z.len(),
            p + q + 3
        )));
    }
    let mut flat = z.to_vec();
    let n = flat.len();
    flat[n - 3] = flat[n - 3].exp();
    flat[n - 2] = flat[n - 2].exp();
    flat[n - 1] = flat[n - 1].tanh();
    ParameterVector::from_flat(&flat, p, q)
}

/// Why a start stopped iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceReason {
    /// Gradient infinity norm fell below tolerance.
    GradientNorm,
    /// Log-likelihood change stalled below the relative tolerance.
    ValueStall,
    MaxIterations,
    LineSearchFailed,
}

impl From<StopReason> for ConvergenceReason {
    fn from(reason: StopReason) -> Self {
        match reason {
            StopReason::GradientNorm => Self::GradientNorm,
            StopReason::ValueStall => Self::ValueStall,
            StopReason::MaxIterations => Self::MaxIterations,
            StopReason::LineSearchFailed => Self::LineSearchFailed,
        }
    }
}

/// Outcome of one start of the multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub start: usize,
    pub converged: bool,
    pub reason: ConvergenceReason,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub gradient_norm: f64,
}

/// Convergence record of the selected start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceInfo {
    pub converged: bool,
    pub reason: ConvergenceReason,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub best_start: usize,
    pub starts: Vec<StartTrace>,
}

/// Numerical health indicators gathered during estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Observations whose category probability was floored at the optimum.
    pub underflow_count: usize,
    /// Condition number of the symmetrized Hessian, when finite.
    pub hessian_condition_number: Option<f64>,
    pub hessian_min_eigenvalue: Option<f64>,
}

/// Curvature summary returned with (or instead of) standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureDiagnostics {
    pub condition_number: Option<f64>,
    pub min_eigenvalue: f64,
}

/// Standard errors from the inverse Hessian; `values` is absent when the
/// Hessian is not positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub values: Option<Vec<f64>>,
    pub curvature: CurvatureDiagnostics,
}

/// Converged parameters with inference-ready companions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta: ParameterVector,
    /// Labels aligned with the flat layout `(gamma, beta, sigma, mu1, rho)`.
    pub parameter_names: Vec<String>,
    pub std_errors: Option<Vec<f64>>,
    pub t_stats: Option<Vec<f64>>,
    /// Log-likelihood at convergence, LL(b).
    pub ll_converged: f64,
    /// Restricted log-likelihood LL(r): slopes and rho fixed at zero,
    /// intercepts, sigma and mu1 free.
    pub ll_restricted: f64,
    pub n_obs: usize,
    /// Parameter-count difference between the full and restricted models.
    pub k_adjustment: usize,
    pub convergence: ConvergenceInfo,
    pub diagnostics: Diagnostics,
}

/// Maximizes the joint log-likelihood over the reparameterized space.
pub fn estimate(data: &Dataset, spec: &ModelSpec) -> Result<EstimationResult> {
    spec.validate()?;
    if spec.n_categories() != 3 {
        return Err(Error::Config(
            "the joint likelihood supports exactly 3 ordinal categories".into(),
        ));
    }
    let p = data.y().ncols();
    let q = data.x().ncols();
    if p != spec.n_duration_params() || q != spec.n_ordinal_params() {
        return Err(Error::Config(format!(
            "dataset shape ({p} duration, {q} ordinal columns) does not match the spec \
             ({} and {})",
            spec.n_duration_params(),
            spec.n_ordinal_params()
        )));
    }
    let n = data.n_obs();
    let n_params = p + q + 3;
    if n < n_params {
        return Err(Error::Data(format!(
            "{n} observations cannot identify {n_params} parameters"
        )));
    }
    let counts = data.category_counts();
    if let Some(missing) = counts.iter().position(|c| *c == 0) {
        return Err(Error::Data(format!(
            "category {} has no observations",
            missing + 1
        )));
    }

    let settings = &spec.settings;
    let start0 = heuristic_start(data, counts)?;
    let z0 = reparameterize(&start0)?;

    let objective = |z: &[f64]| -> (f64, Vec<f64>) {
        match inverse_reparameterize(z, p, q) {
            Ok(theta) => match log_likelihood_with_gradient(data, &theta) {
                Ok((ll, grad)) => (-ll, grad.into_iter().map(|g| -g).collect()),
                Err(_) => (f64::INFINITY, vec![0.0; z.len()]),
            },
            Err(_) => (f64::INFINITY, vec![0.0; z.len()]),
        }
    };
    let opts = BfgsOptions {
        gradient_tolerance: settings.gradient_tolerance,
        value_stall_tolerance: settings.ll_relative_tolerance,
        stall_iterations: settings.ll_stall_iterations,
        max_iterations: settings.max_iterations,
    };

    let n_starts = settings.n_starts.max(1);
    let mut traces = Vec::with_capacity(n_starts);
    let mut best: Option<(usize, optim::BfgsOutcome)> = None;
    for start in 0..n_starts {
        let z_start = if start == 0 {
            z0.clone()
        } else {
            let mut rng = ChaCha12Rng::seed_from_u64(settings.seed.wrapping_add(start as u64));
            z0.iter()
                .map(|z| z + settings.perturbation_scale * standard_normal(&mut rng))
                .collect()
        };
        let outcome = optim::minimize(objective, &z_start, &opts);
        traces.push(StartTrace {
            start,
            converged: outcome.converged,
            reason: outcome.reason.into(),
            iterations: outcome.iterations,
            log_likelihood: -outcome.value,
            gradient_norm: outcome.gradient_norm,
        });
        if outcome.converged {
            let better = match &best {
                // Strictly higher likelihood wins; ties keep the lowest start.
                Some((_, current)) => outcome.value < current.value,
                None => true,
            };
            if better {
                best = Some((start, outcome));
            }
        }
    }

    let (best_start, best_outcome) = best.ok_or_else(|| {
        let detail: Vec<String> = traces
            .iter()
            .map(|t| {
                format!(
                    "start {}: {:?} after {} iterations, LL {:.6}, grad norm {:.3e}",
                    t.start, t.reason, t.iterations, t.log_likelihood, t.gradient_norm
                )
            })
            .collect();
        Error::Convergence(format!("no start converged; {}", detail.join("; ")))
    })?;

    let theta_hat = inverse_reparameterize(&best_outcome.x, p, q)?;
    let ll_value = total_log_likelihood(data, &theta_hat)?;

    let (theta_restricted, n_restricted_free) = restricted_parameters(data, spec, counts)?;
    let ll_restricted = total_log_likelihood(data, &theta_restricted)?.log_likelihood;
    let k_adjustment = n_params - n_restricted_free;

    let se = standard_errors(data, &theta_hat)?;
    let flat = theta_hat.to_flat();
    let t_stats = se
        .values
        .as_ref()
        .map(|ses| flat.iter().zip(ses).map(|(c, s)| c / s).collect());

    Ok(EstimationResult {
        parameter_names: ParameterVector::parameter_names(data.y().names(), data.x().names()),
        theta: theta_hat,
        std_errors: se.values,
        t_stats,
        ll_converged: ll_value.log_likelihood,
        ll_restricted,
        n_obs: n,
        k_adjustment,
        convergence: ConvergenceInfo {
            converged: true,
            reason: traces[best_start].reason,
            iterations: traces[best_start].iterations,
            gradient_norm: traces[best_start].gradient_norm,
            best_start,
            starts: traces,
        },
        diagnostics: Diagnostics {
            underflow_count: ll_value.underflow_count,
            hessian_condition_number: se.curvature.condition_number,
            hessian_min_eigenvalue: Some(se.curvature.min_eigenvalue),
        },
    })
}

/// Inverse-Hessian standard errors at `theta`, which should be a local
/// maximum of the log-likelihood. A non-positive-definite Hessian yields
/// `values: None` together with curvature diagnostics instead of an error.
pub fn standard_errors(data: &Dataset, theta: &ParameterVector) -> Result<StandardErrors> {
    theta.validate()?;
    let p = theta.gamma.len();
    let q = theta.beta.len();
    let flat = theta.to_flat();
    let n_params = flat.len();

    let grad_neg_ll = |point: &[f64]| -> Vec<f64> {
        match ParameterVector::from_flat(point, p, q) {
            Ok(th) => match log_likelihood_gradient_original(data, &th) {
                Ok(g) => g.into_iter().map(|v| -v).collect(),
                Err(_) => vec![f64::NAN; n_params],
            },
            Err(_) => vec![f64::NAN; n_params],
        }
    };
    // Probe steps must keep sigma > 0, mu1 > 0 and |rho| < 1.
    let boundary = |k: usize| -> f64 {
        if k == n_params - 3 {
            theta.sigma
        } else if k == n_params - 2 {
            theta.mu1
        } else if k == n_params - 1 {
            1.0 - theta.rho.abs()
        } else {
            f64::INFINITY
        }
    };
    let hessian = optim::numerical_hessian_from_gradient(grad_neg_ll, &flat, 1e-4, boundary);
    if hessian.iter().any(|v| !v.is_finite()) {
        return Ok(StandardErrors {
            values: None,
            curvature: CurvatureDiagnostics {
                condition_number: None,
                min_eigenvalue: f64::NAN,
            },
        });
    }

    let eigen = SymmetricEigen::new(hessian);
    let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eig = eigen.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let condition_number = if min_eig > 0.0 {
        Some(max_eig / min_eig)
    } else {
        None
    };
    if min_eig <= 0.0 {
        return Ok(StandardErrors {
            values: None,
            curvature: CurvatureDiagnostics {
                condition_number,
                min_eigenvalue: min_eig,
            },
        });
    }

    // Inverse through the eigendecomposition; diagonal entries are the
    // parameter variances.
    let mut variances = vec![0.0f64; n_params];
    for (j, lambda) in eigen.eigenvalues.iter().enumerate() {
        for i in 0..n_params {
            let v = eigen.eigenvectors[(i, j)];
            variances[i] += v * v / lambda;
        }
    }
    Ok(StandardErrors {
        values: Some(variances.iter().map(|v| v.sqrt()).collect()),
        curvature: CurvatureDiagnostics {
            condition_number,
            min_eigenvalue: min_eig,
        },
    })
}

// Least squares of ln d on Y for the duration block, intercept-only probit
// matched to category frequencies for the ordinal block, rho = 0.
fn heuristic_start(data: &Dataset, counts: [usize; 3]) -> Result<ParameterVector> {
    let n = data.n_obs();
    let p = data.y().ncols();
    let q = data.x().ncols();
    let lnd: Vec<f64> = data
        .observations()
        .iter()
        .map(|o| o.departure_hours.ln())
        .collect();

    let (gamma, sigma) = if p == 0 {
        let variance = lnd.iter().map(|v| v * v).sum::<f64>() / n as f64;
        (Vec::new(), variance.sqrt().max(1e-3))
    } else {
        let y = DMatrix::from_fn(n, p, |i, j| data.y().get(i, j));
        let rhs = DVector::from_column_slice(&lnd);
        let gamma = y
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Data(format!("least-squares start failed: {e}")))?;
        let residuals = rhs - y * &gamma;
        let variance = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
        (gamma.iter().cloned().collect(), variance.sqrt().max(1e-3))
    };

    let (b0, mu1) = intercept_only_probit(counts, n);
    let mut beta = vec![0.0; q];
    beta[0] = b0;
    ParameterVector::new(gamma, beta, sigma, mu1, 0.0)
}

// Closed-form intercept-only ordered probit: matches the empirical category
// shares exactly, so it is the maximizer of the ordinal block under zero
// slopes.
fn intercept_only_probit(counts: [usize; 3], n: usize) -> (f64, f64) {
    let normal = statrs::distribution::Normal::standard();
    let share1 = counts[0] as f64 / n as f64;
    let share12 = (counts[0] + counts[1]) as f64 / n as f64;
    let b0 = -normal.inverse_cdf(share1);
    let mu1 = normal.inverse_cdf(share12) - normal.inverse_cdf(share1);
    (b0, mu1.max(1e-8))
}

// The restricted model: every slope and rho pinned at zero, intercepts,
// sigma and mu1 free. Both blocks then maximize in closed form.
fn restricted_parameters(
    data: &Dataset,
    spec: &ModelSpec,
    counts: [usize; 3],
) -> Result<(ParameterVector, usize)> {
    let n = data.n_obs();
    let p = data.y().ncols();
    let q = data.x().ncols();
    let lnd: Vec<f64> = data
        .observations()
        .iter()
        .map(|o| o.departure_hours.ln())
        .collect();

    let mut gamma = vec![0.0; p];
    let sigma;
    if spec.include_duration_intercept && p > 0 {
        let mean = lnd.iter().sum::<f64>() / n as f64;
        gamma[0] = mean;
        sigma = (lnd.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64)
            .sqrt()
            .max(1e-12);
    } else {
        sigma = (lnd.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .sqrt()
            .max(1e-12);
    }

    let (b0, mu1) = intercept_only_probit(counts, n);
    let mut beta = vec![0.0; q];
    beta[0] = b0;

    let n_free = usize::from(spec.include_duration_intercept && p > 0) + 1 + 2;
    Ok((ParameterVector::new(gamma, beta, sigma, mu1, 0.0)?, n_free))
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
