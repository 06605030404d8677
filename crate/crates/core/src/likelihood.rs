//! Per-observation joint densities, the sample log-likelihood and its gradient.
//!
//! The duration error alpha ~ N(0, sigma^2) and the latent ordinal error
//! eps ~ N(0, 1) are correlated with coefficient rho. Conditioning eps on the
//! standardized duration residual z = (ln d - gamma.y)/sigma gives
//! eps | z ~ N(rho z, 1 - rho^2), so with v = beta.x, s = sqrt(1 - rho^2) the
//! joint density of an observed (d, tt) pair is
//!
//! ```text
//! tt = 1:  (1/(d sigma)) phi(z) Phi((-v - rho z)/s)
//! tt = 2:  (1/(d sigma)) phi(z) [Phi((mu1 - v - rho z)/s) - Phi((-v - rho z)/s)]
//! tt = 3:  (1/(d sigma)) phi(z) Phi((v - mu1 + rho z)/s)
//! ```
//!
//! Everything is carried in log space. Category probabilities that underflow
//! are floored at `PROBABILITY_FLOOR` and flagged rather than turned into
//! errors, so the optimizer can traverse bad interim parameter values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Observation};

/// Smallest category probability admitted before taking the log.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_8;

/// Full parameter set of the joint model: duration coefficients `gamma`,
/// ordinal coefficients `beta`, duration error scale `sigma`, upper threshold
/// `mu1` (the lower threshold is fixed at zero) and error correlation `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub mu1: f64,
    pub rho: f64,
}

impl ParameterVector {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>, sigma: f64, mu1: f64, rho: f64) -> Result<Self> {
        let theta = Self {
            gamma,
            beta,
            sigma,
            mu1,
            rho,
        };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.iter().chain(self.beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.mu1.is_finite() && self.mu1 > 0.0) {
            return Err(Error::Domain(format!(
                "mu1 must exceed the lower threshold 0, got {}",
                self.mu1
            )));
        }
        if !(self.rho.is_finite() && self.rho.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "rho must lie strictly inside (-1, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// Total parameter count `p + q + 3`.
    pub fn n_params(&self) -> usize {
        self.gamma.len() + self.beta.len() + 3
    }

    /// Flat layout `(gamma, beta, sigma, mu1, rho)` in original coordinates.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        flat.extend_from_slice(&self.gamma);
        flat.extend_from_slice(&self.beta);
        flat.push(self.sigma);
        flat.push(self.mu1);
        flat.push(self.rho);
        flat
    }

    pub fn from_flat(flat: &[f64], p: usize, q: usize) -> Result<Self> {
        if flat.len() != p + q + 3 {
            return Err(Error::Domain(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                p + q + 3
            )));
        }
        Self::new(
            flat[..p].to_vec(),
            flat[p..p + q].to_vec(),
            flat[p + q],
            flat[p + q + 1],
            flat[p + q + 2],
        )
    }

    /// Report labels aligned with the flat layout.
    pub fn parameter_names(y_names: &[String], x_names: &[String]) -> Vec<String> {
        let mut names: Vec<String> = Vec::with_capacity(y_names.len() + x_names.len() + 3);
        names.extend(y_names.iter().map(|n| format!("duration:{n}")));
        names.extend(x_names.iter().map(|n| format!("ordinal:{n}")));
        names.push("sigma".into());
        names.push("mu1".into());
        names.push("rho".into());
        names
    }
}

/// Log density of one observation plus the underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEval {
    pub log_density: f64,
    pub underflowed: bool,
}

/// Total log-likelihood with its per-observation terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodValue {
    pub log_likelihood: f64,
    pub per_observation: Vec<f64>,
    /// Observations whose category probability was floored.
    pub underflow_count: usize,
}

/// Standard normal density.
pub fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() * (1.0 / (2.0 * std::f64::consts::PI).sqrt())
}

/// Standard normal distribution function, absolute error below 1e-13 on
/// |t| <= 8 with monotone clamped tails beyond.
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

// Rational Chebyshev approximation of erfc after W. J. Cody (SPECFUN),
// accurate to a few ulp in double precision.
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_89e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_562_87e-1;

fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        let ysq = if y > 1.11e-16 { y * y } else { 0.0 };
        let mut xnum = ERF_A[4] * ysq;
        let mut xden = ysq;
        for i in 0..3 {
            xnum = (xnum + ERF_A[i]) * ysq;
            xden = (xden + ERF_B[i]) * ysq;
        }
        return 1.0 - x * (xnum + ERF_A[3]) / (xden + ERF_B[3]);
    } else if y <= 4.0 {
        let mut xnum = ERF_C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + ERF_C[i]) * y;
            xden = (xden + ERF_D[i]) * y;
        }
        let r = (xnum + ERF_C[7]) / (xden + ERF_D[7]);
        scaled_tail(y, r)
    } else if y < 26.543 {
        let ysq = 1.0 / (y * y);
        let mut xnum = ERF_P[5] * ysq;
        let mut xden = ysq;
        for i in 0..4 {
            xnum = (xnum + ERF_P[i]) * ysq;
            xden = (xden + ERF_Q[i]) * ysq;
        }
        let r = (FRAC_1_SQRT_PI - ysq * (xnum + ERF_P[4]) / (xden + ERF_Q[4])) / y;
        scaled_tail(y, r)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

// exp(-y^2) computed as exp(-ysq^2) exp(-(y-ysq)(y+ysq)) with ysq a 1/16
// truncation of y, which keeps the argument splitting exact.
fn scaled_tail(y: f64, r: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}

/// P(lo < Z <= hi) computed from the nearer tail so that two large same-sign
/// arguments do not cancel.
pub fn std_normal_cdf_diff(hi: f64, lo: f64) -> f64 {
    debug_assert!(hi >= lo);
    let sqrt2 = std::f64::consts::SQRT_2;
    let p = if lo >= 0.0 {
        0.5 * (erfc(lo / sqrt2) - erfc(hi / sqrt2))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi / sqrt2) - erfc(-lo / sqrt2))
    } else {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    };
    p.max(0.0)
}

/// Inverse Mills ratio phi(u)/Phi(u); asymptotic series in the deep lower
/// tail where the direct quotient loses precision.
pub(crate) fn inverse_mills_ratio(u: f64) -> f64 {
    if u > -20.0 {
        std_normal_pdf(u) / std_normal_cdf(u)
    } else {
        let x = -u;
        let x2 = 1.0 / (x * x);
        // Phi(u)/phi(u) = (1/x)(1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - 945/x^10)
        let series = 1.0 + x2 * (-1.0 + x2 * (3.0 + x2 * (-15.0 + x2 * (105.0 - 945.0 * x2))));
        x / series
    }
}

/// Unconditional ordered-probit category probabilities
/// `[Phi(-v), Phi(mu1 - v) - Phi(-v), Phi(v - mu1)]` for linear index `v`.
pub fn ordinal_category_probabilities(v: f64, mu1: f64) -> [f64; 3] {
    [
        std_normal_cdf(-v),
        std_normal_cdf_diff(mu1 - v, -v),
        std_normal_cdf(v - mu1),
    ]
}

/// Joint log density at an explicit duration and category.
pub fn joint_log_density_at(
    d_hours: f64,
    category: u8,
    y_row: &[f64],
    x_row: &[f64],
    theta: &ParameterVector,
) -> Result<DensityEval> {
    theta.validate()?;
    if !(d_hours.is_finite() && d_hours > 0.0) {
        return Err(Error::Domain(format!(
            "departure duration must be positive, got {d_hours}"
        )));
    }
    if y_row.len() != theta.gamma.len() || x_row.len() != theta.beta.len() {
        return Err(Error::Data(format!(
            "covariate rows ({}, {}) do not match parameter dimensions ({}, {})",
            y_row.len(),
            x_row.len(),
            theta.gamma.len(),
            theta.beta.len()
        )));
    }
    joint_log_density_unchecked(d_hours, category, y_row, x_row, theta)
}

/// Joint log density of one observation given its covariate rows.
pub fn joint_log_density(
    obs: &Observation,
    theta: &ParameterVector,
    y_row: &[f64],
    x_row: &[f64],
) -> Result<DensityEval> {
    joint_log_density_at(obs.departure_hours, obs.travel_category, y_row, x_row, theta)
}

fn joint_log_density_unchecked(
    d_hours: f64,
    category: u8,
    y_row: &[f64],
    x_row: &[f64],
    theta: &ParameterVector,
) -> Result<DensityEval> {
    let z = (d_hours.ln() - dot(&theta.gamma, y_row)) / theta.sigma;
    let v = dot(&theta.beta, x_row);
    let s = (1.0 - theta.rho * theta.rho).sqrt();
    let rz = theta.rho * z;
    let prob = match category {
        1 => std_normal_cdf((-v - rz) / s),
        2 => std_normal_cdf_diff((theta.mu1 - v - rz) / s, (-v - rz) / s),
        3 => std_normal_cdf((v - theta.mu1 + rz) / s),
        c => {
            return Err(Error::Domain(format!(
                "travel category {c} outside the supported range 1..=3"
            )))
        }
    };
    let underflowed = prob < PROBABILITY_FLOOR;
    let prob = prob.max(PROBABILITY_FLOOR);
    let log_density = -d_hours.ln() - theta.sigma.ln() - LN_SQRT_2PI - 0.5 * z * z + prob.ln();
    Ok(DensityEval {
        log_density,
        underflowed,
    })
}

/// Sum of the per-observation joint log densities over the dataset.
/// Accumulation is compensated and evaluation order is fixed, so repeated
/// calls return bit-identical values.
pub fn total_log_likelihood(data: &Dataset, theta: &ParameterVector) -> Result<LikelihoodValue> {
    theta.validate()?;
    if data.n_obs() == 0 {
        return Err(Error::Data("dataset is empty".into()));
    }
    check_dims(data, theta)?;
    let mut per_observation = Vec::with_capacity(data.n_obs());
    let mut sum = NeumaierSum::default();
    let mut underflow_count = 0usize;
    for (i, obs) in data.observations().iter().enumerate() {
        let eval = joint_log_density_unchecked(
            obs.departure_hours,
            obs.travel_category,
            data.y().row(i),
            data.x().row(i),
            theta,
        )
        .map_err(|e| Error::Domain(format!("observation {i} ('{}'): {e}", obs.id)))?;
        per_observation.push(eval.log_density);
        sum.add(eval.log_density);
        underflow_count += usize::from(eval.underflowed);
    }
    Ok(LikelihoodValue {
        log_likelihood: sum.value(),
        per_observation,
        underflow_count,
    })
}

/// Gradient of the log-likelihood in the unconstrained reparameterization
/// `(gamma, beta, ln sigma, ln mu1, atanh rho)`.
pub fn log_likelihood_gradient(data: &Dataset, theta: &ParameterVector) -> Result<Vec<f64>> {
    Ok(log_likelihood_with_gradient(data, theta)?.1)
}

/// Gradient in the original coordinates `(gamma, beta, sigma, mu1, rho)`;
/// this is what the curvature-based standard errors differentiate.
pub fn log_likelihood_gradient_original(
    data: &Dataset,
    theta: &ParameterVector,
) -> Result<Vec<f64>> {
    let (_, _, grad) = evaluate(data, theta)?;
    Ok(grad)
}

/// Log-likelihood and reparameterized gradient in one pass; the form the
/// quasi-Newton search consumes.
pub fn log_likelihood_with_gradient(
    data: &Dataset,
    theta: &ParameterVector,
) -> Result<(f64, Vec<f64>)> {
    let (ll, _, mut grad) = evaluate(data, theta)?;
    let p = theta.gamma.len();
    let q = theta.beta.len();
    // Chain rule onto (ln sigma, ln mu1, atanh rho).
    grad[p + q] *= theta.sigma;
    grad[p + q + 1] *= theta.mu1;
    grad[p + q + 2] *= 1.0 - theta.rho * theta.rho;
    Ok((ll, grad))
}

fn check_dims(data: &Dataset, theta: &ParameterVector) -> Result<()> {
    if data.y().ncols() != theta.gamma.len() || data.x().ncols() != theta.beta.len() {
        return Err(Error::Data(format!(
            "design matrices ({} and {} columns) do not match parameter dimensions ({} and {})",
            data.y().ncols(),
            data.x().ncols(),
            theta.gamma.len(),
            theta.beta.len()
        )));
    }
    Ok(())
}

// Value plus analytic gradient in original coordinates. Observations whose
// category probability is floored contribute a locally flat (zero-gradient)
// probability term, matching the floored objective exactly.
fn evaluate(data: &Dataset, theta: &ParameterVector) -> Result<(f64, usize, Vec<f64>)> {
    theta.validate()?;
    if data.n_obs() == 0 {
        return Err(Error::Data("dataset is empty".into()));
    }
    check_dims(data, theta)?;

    let p = theta.gamma.len();
    let q = theta.beta.len();
    let sigma = theta.sigma;
    let mu1 = theta.mu1;
    let rho = theta.rho;
    let s = (1.0 - rho * rho).sqrt();
    let s2 = 1.0 - rho * rho;

    let mut ll = NeumaierSum::default();
    let mut grad = vec![0.0; p + q + 3];
    let mut underflow_count = 0usize;

    for (i, obs) in data.observations().iter().enumerate() {
        let y_row = data.y().row(i);
        let x_row = data.x().row(i);
        let lnd = obs.departure_hours.ln();
        let z = (lnd - dot(&theta.gamma, y_row)) / sigma;
        let v = dot(&theta.beta, x_row);
        let rz = rho * z;

        // (d lnP/d arg) pieces shared by the three categories.
        let (prob, w_hi, w_lo, hi, lo) = match obs.travel_category {
            1 => {
                let u = (-v - rz) / s;
                let prob = std_normal_cdf(u);
                (prob, 0.0, -inverse_mills_ratio(u), 0.0, u)
            }
            2 => {
                let hi = (mu1 - v - rz) / s;
                let lo = (-v - rz) / s;
                let prob = std_normal_cdf_diff(hi, lo);
                if prob < PROBABILITY_FLOOR {
                    (prob, 0.0, 0.0, hi, lo)
                } else {
                    (
                        prob,
                        std_normal_pdf(hi) / prob,
                        std_normal_pdf(lo) / prob,
                        hi,
                        lo,
                    )
                }
            }
            3 => {
                let u = (v - mu1 + rz) / s;
                let prob = std_normal_cdf(u);
                (prob, inverse_mills_ratio(u), 0.0, u, 0.0)
            }
            c => {
                return Err(Error::Domain(format!(
                    "observation {i} ('{}'): travel category {c} outside 1..=3",
                    obs.id
                )))
            }
        };

        let underflowed = prob < PROBABILITY_FLOOR;
        underflow_count += usize::from(underflowed);
        let floored = prob.max(PROBABILITY_FLOOR);
        ll.add(-lnd - sigma.ln() - LN_SQRT_2PI - 0.5 * z * z + floored.ln());

        // Derivatives of the probability arguments. For categories 1 and 3
        // one of (w_hi, w_lo) is zero, which collapses the shared formulas.
        let (dv_sign, dmu_hi, dmu_lo) = match obs.travel_category {
            1 => (-1.0, 0.0, 0.0),
            2 => (-1.0, 1.0 / s, 0.0),
            _ => (1.0, -1.0 / s, 0.0),
        };
        let (dlnp_dv, dlnp_dz_scaled, dlnp_dmu, dlnp_drho);
        if underflowed {
            dlnp_dv = 0.0;
            dlnp_dz_scaled = 0.0;
            dlnp_dmu = 0.0;
            dlnp_drho = 0.0;
        } else {
            let w_diff = w_hi - w_lo;
            dlnp_dv = w_diff * dv_sign / s;
            // d lnP / d(rho z), before the per-parameter chain rule.
            dlnp_dz_scaled = match obs.travel_category {
                3 => w_diff / s,
                _ => -w_diff / s,
            };
            dlnp_dmu = w_hi * dmu_hi + w_lo * dmu_lo;
            dlnp_drho = match obs.travel_category {
                1 => -w_lo * (-z / s + rho * lo / s2),
                2 => w_hi * (-z / s + rho * hi / s2) - w_lo * (-z / s + rho * lo / s2),
                _ => w_hi * (z / s + rho * hi / s2),
            };
        }

        // gamma_k: phi-term z y_k / sigma, probability term through z.
        let dz_common = z / sigma + dlnp_dz_scaled * (-rho / sigma);
        for (k, yk) in y_row.iter().enumerate() {
            grad[k] += dz_common * yk;
        }
        for (k, xk) in x_row.iter().enumerate() {
            grad[p + k] += dlnp_dv * xk;
        }
        grad[p + q] += (z * z - 1.0) / sigma + dlnp_dz_scaled * (-rho * z / sigma);
        grad[p + q + 1] += dlnp_dmu;
        grad[p + q + 2] += dlnp_drho;
    }
    Ok((ll.value(), underflow_count, grad))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compensated (Neumaier) summation; deterministic for a fixed order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
