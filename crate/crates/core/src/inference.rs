//! Post-estimation quantities: average marginal effects for both equations,
//! the likelihood-ratio test, adjusted rho-squared, correlation matrices and
//! descriptive statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::likelihood::{ordinal_category_probabilities, std_normal_pdf, ParameterVector};
use crate::model::{Dataset, INTERCEPT_NAME};

/// How a covariate's effect was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectMethod {
    /// Binary column: difference between the covariate set to 1 and to 0.
    DiscreteDifference,
    /// Continuous column: analytic derivative at the observed values.
    Derivative,
}

/// Which location of the duration distribution the effects target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationScale {
    /// Effects on the lognormal mean exp(gamma.y + sigma^2/2).
    #[default]
    Mean,
    /// Effects on the lognormal median exp(gamma.y).
    Median,
}

/// Average effect of one duration-equation covariate, in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationEffect {
    pub covariate: String,
    pub effect_hours: f64,
    pub method: EffectMethod,
}

/// Average effect of one ordinal-equation covariate on the three category
/// probabilities; the entries sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalEffect {
    pub covariate: String,
    pub effects: [f64; 3],
    pub method: EffectMethod,
}

/// Average marginal effects for both equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffectsReport {
    pub duration_scale: DurationScale,
    pub duration_effects: Vec<DurationEffect>,
    pub ordinal_effects: Vec<OrdinalEffect>,
}

/// Average marginal effect of one duration covariate on the expected
/// departure time. Binary columns get a discrete 0-to-1 difference of the
/// lognormal location, all others the derivative `gamma_k * E[d]`, averaged
/// over the sample.
pub fn duration_marginal_effect(
    data: &Dataset,
    theta: &ParameterVector,
    covariate: &str,
    scale: DurationScale,
) -> Result<DurationEffect> {
    theta.validate()?;
    let y = data.y();
    let k = y
        .column_index(covariate)
        .ok_or_else(|| Error::UnknownColumn(format!("{covariate} (duration equation)")))?;
    if y.ncols() != theta.gamma.len() {
        return Err(Error::Data("dataset does not match parameter dimensions".into()));
    }
    let half_var = match scale {
        DurationScale::Mean => 0.5 * theta.sigma * theta.sigma,
        DurationScale::Median => 0.0,
    };
    let n = data.n_obs() as f64;
    let binary = y.column_is_binary(k);
    let mut total = 0.0f64;
    for i in 0..data.n_obs() {
        let row = y.row(i);
        let base: f64 = row
            .iter()
            .zip(&theta.gamma)
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, (v, g))| v * g)
            .sum();
        if binary {
            total += (base + theta.gamma[k] + half_var).exp() - (base + half_var).exp();
        } else {
            total += theta.gamma[k] * (base + theta.gamma[k] * row[k] + half_var).exp();
        }
    }
    Ok(DurationEffect {
        covariate: covariate.to_string(),
        effect_hours: total / n,
        method: if binary {
            EffectMethod::DiscreteDifference
        } else {
            EffectMethod::Derivative
        },
    })
}

/// Average marginal effect of one ordinal covariate on the unconditional
/// category probabilities `(P(tt=1), P(tt=2), P(tt=3))`.
pub fn ordinal_marginal_effect(
    data: &Dataset,
    theta: &ParameterVector,
    covariate: &str,
) -> Result<OrdinalEffect> {
    theta.validate()?;
    let x = data.x();
    let k = x
        .column_index(covariate)
        .ok_or_else(|| Error::UnknownColumn(format!("{covariate} (ordinal equation)")))?;
    if x.ncols() != theta.beta.len() {
        return Err(Error::Data("dataset does not match parameter dimensions".into()));
    }
    let n = data.n_obs() as f64;
    let binary = x.column_is_binary(k);
    let mut total = [0.0f64; 3];
    for i in 0..data.n_obs() {
        let row = x.row(i);
        let base: f64 = row
            .iter()
            .zip(&theta.beta)
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, (v, b))| v * b)
            .sum();
        if binary {
            let on = ordinal_category_probabilities(base + theta.beta[k], theta.mu1);
            let off = ordinal_category_probabilities(base, theta.mu1);
            for c in 0..3 {
                total[c] += on[c] - off[c];
            }
        } else {
            let v = base + theta.beta[k] * row[k];
            let b = theta.beta[k];
            total[0] += -std_normal_pdf(-v) * b;
            total[1] += (std_normal_pdf(-v) - std_normal_pdf(theta.mu1 - v)) * b;
            total[2] += std_normal_pdf(v - theta.mu1) * b;
        }
    }
    Ok(OrdinalEffect {
        covariate: covariate.to_string(),
        effects: [total[0] / n, total[1] / n, total[2] / n],
        method: if binary {
            EffectMethod::DiscreteDifference
        } else {
            EffectMethod::Derivative
        },
    })
}

/// Effects for every non-intercept covariate of both equations.
pub fn marginal_effects(
    data: &Dataset,
    theta: &ParameterVector,
    scale: DurationScale,
) -> Result<MarginalEffectsReport> {
    let mut duration_effects = Vec::new();
    for name in data.y().names() {
        if name != INTERCEPT_NAME {
            duration_effects.push(duration_marginal_effect(data, theta, name, scale)?);
        }
    }
    let mut ordinal_effects = Vec::new();
    for name in data.x().names() {
        if name != INTERCEPT_NAME {
            ordinal_effects.push(ordinal_marginal_effect(data, theta, name)?);
        }
    }
    Ok(MarginalEffectsReport {
        duration_scale: scale,
        duration_effects,
        ordinal_effects,
    })
}

/// A likelihood-ratio statistic against chi-squared critical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatioTest {
    pub chi2: f64,
    pub dof: usize,
    pub comparisons: Vec<CriticalValueComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueComparison {
    /// Confidence level in (0, 1).
    pub confidence: f64,
    pub critical_value: f64,
    pub exceeds: bool,
}

/// chi^2 = -2 [LL(r) - LL(b)], compared against the chi-squared quantiles at
/// the requested confidence levels.
pub fn likelihood_ratio_test(
    ll_converged: f64,
    ll_restricted: f64,
    dof: usize,
    confidence_levels: &[f64],
) -> Result<LikelihoodRatioTest> {
    let chi2 = -2.0 * (ll_restricted - ll_converged);
    if chi2 < -1e-8 {
        return Err(Error::Domain(format!(
            "restricted log-likelihood {ll_restricted} exceeds converged {ll_converged}"
        )));
    }
    let chi2 = chi2.max(0.0);
    if dof == 0 {
        return Err(Error::Domain("likelihood ratio test needs dof >= 1".into()));
    }
    let dist = statrs::distribution::ChiSquared::new(dof as f64)
        .map_err(|e| Error::Domain(format!("chi-squared with {dof} dof: {e}")))?;
    let comparisons = confidence_levels
        .iter()
        .map(|level| {
            if !(*level > 0.0 && *level < 1.0) {
                return Err(Error::Domain(format!(
                    "confidence level {level} outside (0, 1)"
                )));
            }
            let critical_value = dist.inverse_cdf(*level);
            Ok(CriticalValueComparison {
                confidence: *level,
                critical_value,
                exceeds: chi2 > critical_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LikelihoodRatioTest {
        chi2,
        dof,
        comparisons,
    })
}

/// Adjusted rho^2 = 1 - (LL(b) - K) / LL(r).
pub fn adjusted_rho_squared(ll_converged: f64, ll_restricted: f64, k: usize) -> Result<f64> {
    if ll_restricted == 0.0 {
        return Err(Error::Domain(
            "adjusted rho^2 is undefined for a zero restricted log-likelihood".into(),
        ));
    }
    if ll_restricted >= 0.0 {
        return Err(Error::Domain(
            "restricted log-likelihood must be negative".into(),
        ));
    }
    Ok(1.0 - (ll_converged - k as f64) / ll_restricted)
}

/// Fit summary block combining the LR test and adjusted rho^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub chi2: f64,
    pub chi2_dof: usize,
    pub ll_converged: f64,
    pub ll_restricted: f64,
    pub k: usize,
    pub adjusted_rho2: f64,
    pub n_obs: Option<usize>,
    pub comparisons: Vec<CriticalValueComparison>,
}

pub fn fit_report(
    ll_converged: f64,
    ll_restricted: f64,
    k: usize,
    n_obs: Option<usize>,
    confidence_levels: &[f64],
) -> Result<FitReport> {
    let lr = likelihood_ratio_test(ll_converged, ll_restricted, k, confidence_levels)?;
    Ok(FitReport {
        chi2: lr.chi2,
        chi2_dof: lr.dof,
        ll_converged,
        ll_restricted,
        k,
        adjusted_rho2: adjusted_rho_squared(ll_converged, ll_restricted, k)?,
        n_obs,
        comparisons: lr.comparisons,
    })
}

/// Pairwise Pearson correlations with named rows/columns. Entries involving
/// a constant column are undefined and reported as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub constant_columns: Vec<String>,
}

pub fn correlation_matrix(columns: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    if columns.is_empty() {
        return Err(Error::Data("no columns supplied".into()));
    }
    let n = columns[0].1.len();
    if n < 2 {
        return Err(Error::Data("correlations need at least 2 rows".into()));
    }
    if columns.iter().any(|(_, c)| c.len() != n) {
        return Err(Error::Data("columns have unequal lengths".into()));
    }
    let means: Vec<f64> = columns.iter().map(|(_, c)| c.iter().sum::<f64>() / n as f64).collect();
    let sumsq: Vec<f64> = columns
        .iter()
        .zip(&means)
        .map(|((_, c), m)| c.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .collect();
    let constant: Vec<bool> = sumsq.iter().map(|s| *s == 0.0).collect();
    let k = columns.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let cell = if constant[i] || constant[j] {
                None
            } else if i == j {
                Some(1.0)
            } else {
                let cov: f64 = columns[i]
                    .1
                    .iter()
                    .zip(&columns[j].1)
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum();
                Some(cov / (sumsq[i] * sumsq[j]).sqrt())
            };
            values[i][j] = cell;
            values[j][i] = cell;
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|(n, _)| n.clone()).collect(),
        values,
        constant_columns: columns
            .iter()
            .zip(&constant)
            .filter(|(_, c)| **c)
            .map(|((n, _), _)| n.clone())
            .collect(),
    })
}

/// Sample mean, standard deviation (n-1 denominator), minimum and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

pub fn descriptive_stats(columns: &[(String, Vec<f64>)]) -> Result<Vec<ColumnStats>> {
    columns
        .iter()
        .map(|(name, values)| {
            if values.is_empty() {
                return Err(Error::Data(format!("column '{name}' is empty")));
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_dev = if values.len() == 1 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            Ok(ColumnStats {
                name: name.clone(),
                mean,
                std_dev,
                min: values.iter().cloned().fold(f64::INFINITY, f64::min),
                max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, DesignMatrix, Observation};
    use proptest::prelude::*;

    fn single_row_dataset(y_row: Vec<f64>, x_row: Vec<f64>) -> Dataset {
        let y_names: Vec<String> = (0..y_row.len())
            .map(|i| if i == 0 { INTERCEPT_NAME.into() } else { format!("y{i}") })
            .collect();
        let x_names: Vec<String> = (0..x_row.len())
            .map(|i| if i == 0 { INTERCEPT_NAME.into() } else { format!("x{i}") })
            .collect();
        Dataset::new(
            vec![Observation::new("1", 1.0, 1)],
            DesignMatrix::from_rows(y_names, &[y_row]).unwrap(),
            DesignMatrix::from_rows(x_names, &[x_row]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn duration_effect_zero_coefficient_is_exactly_zero() {
        let theta = ParameterVector::new(vec![4.36, 0.0], vec![0.0], 0.49, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0, 1.0], vec![1.0]);
        let eff =
            duration_marginal_effect(&data, &theta, "y1", DurationScale::Mean).unwrap();
        assert_eq!(eff.effect_hours, 0.0);
    }

    #[test]
    fn duration_effect_matches_lognormal_mean_difference() {
        // Intercept 4.36, sigma 0.49, binary coefficient -0.25:
        // exp(sigma^2/2) (exp(4.11) - exp(4.36)).
        let theta = ParameterVector::new(vec![4.36, -0.25], vec![0.0], 0.49, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0, 1.0], vec![1.0]);
        let eff =
            duration_marginal_effect(&data, &theta, "y1", DurationScale::Mean).unwrap();
        assert_eq!(eff.method, EffectMethod::DiscreteDifference);
        assert!((eff.effect_hours - (-19.5184163982273143)).abs() < 1e-10);

        let median = duration_marginal_effect(&data, &theta, "y1", DurationScale::Median).unwrap();
        let expected = (4.36f64 - 0.25).exp() - 4.36f64.exp();
        assert!((median.effect_hours - expected).abs() < 1e-10);
    }

    #[test]
    fn duration_effect_monte_carlo_cross_check() {
        // The analytic lognormal mean is checked against simple averaging of
        // exp(location + sigma Z) draws with shared Z across both settings.
        use rand::SeedableRng;
        let theta = ParameterVector::new(vec![4.36, -0.25], vec![0.0], 0.49, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0, 1.0], vec![1.0]);
        let eff = duration_marginal_effect(&data, &theta, "y1", DurationScale::Mean)
            .unwrap()
            .effect_hours;

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let n = 10_000_000usize;
        let mut mean_scale = 0.0f64;
        for _ in 0..n {
            let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            mean_scale += (0.49 * z).exp();
        }
        mean_scale /= n as f64;
        let mc = mean_scale * ((4.36f64 - 0.25).exp() - 4.36f64.exp());
        assert!(
            (eff - mc).abs() < 0.05,
            "analytic {eff}, monte carlo {mc}"
        );
    }

    #[test]
    fn ordinal_effect_matches_reference_probabilities() {
        // beta_k = 0.76, mu1 = 0.41, all other linear-index terms zero.
        let theta = ParameterVector::new(vec![0.0], vec![0.0, 0.76], 1.0, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0], vec![1.0, 0.0]);
        let eff = ordinal_marginal_effect(&data, &theta, "x1").unwrap();
        assert!((eff.effects[0] - (-0.276372707562400566)).abs() < 1e-12);
        assert!((eff.effects[1] - (-0.019554969840895892)).abs() < 1e-12);
        assert!((eff.effects[2] - 0.295927677403296458).abs() < 1e-12);
        let sum: f64 = eff.effects.iter().sum();
        assert!(sum.abs() < 1e-12);
    }

    #[test]
    fn ordinal_effect_zero_coefficient_is_exactly_zero() {
        let theta = ParameterVector::new(vec![0.0], vec![0.3, 0.0], 1.0, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0], vec![1.0, 0.7]);
        let eff = ordinal_marginal_effect(&data, &theta, "x1").unwrap();
        assert_eq!(eff.effects, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn unknown_covariate_is_a_lookup_error() {
        let theta = ParameterVector::new(vec![0.0], vec![0.0], 1.0, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0], vec![1.0]);
        assert!(matches!(
            duration_marginal_effect(&data, &theta, "ghost", DurationScale::Mean),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            ordinal_marginal_effect(&data, &theta, "ghost"),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn small_coefficient_binary_effect_approaches_derivative_form() {
        // For |gamma_k| -> 0 the discrete 0-to-1 difference and the
        // derivative form agree to O(gamma_k^2).
        let g = 1e-3;
        let theta = ParameterVector::new(vec![4.0, g], vec![0.0], 0.49, 0.41, 0.0).unwrap();
        let data = single_row_dataset(vec![1.0, 1.0], vec![1.0]);
        let eff = duration_marginal_effect(&data, &theta, "y1", DurationScale::Mean).unwrap();
        assert_eq!(eff.method, EffectMethod::DiscreteDifference);
        let derivative = g * (4.0 + g + 0.5 * 0.49f64 * 0.49).exp();
        assert!((eff.effect_hours - derivative).abs() < 70.0 * g * g);
    }

    #[test]
    fn lr_test_reproduces_reference_statistic() {
        let lr = likelihood_ratio_test(-1071.40, -1157.91, 13, &[0.9999]).unwrap();
        assert!((lr.chi2 - 173.02).abs() < 1e-9);
        assert!(lr.comparisons[0].exceeds);
        // The customary 26.22 critical value (12 dof at 99%) is exceeded too.
        assert!(lr.chi2 > 26.22);

        let zero = likelihood_ratio_test(-55.5, -55.5, 4, &[0.95]).unwrap();
        assert_eq!(zero.chi2, 0.0);
        assert!(likelihood_ratio_test(-100.0, -90.0, 4, &[0.95]).is_err());
    }

    #[test]
    fn adjusted_rho_squared_reference_value() {
        let v = adjusted_rho_squared(-1071.40, -1157.91, 13).unwrap();
        assert!((v - 0.0634850722422295342).abs() < 1e-12);
        assert_eq!(adjusted_rho_squared(-50.0, -50.0, 0).unwrap(), 0.0);
        assert!(adjusted_rho_squared(-50.0, 0.0, 1).is_err());
    }

    #[test]
    fn adjusted_rho_squared_decreases_in_k() {
        let mut prev = f64::INFINITY;
        for k in 0..6 {
            let v = adjusted_rho_squared(-1071.40, -1157.91, k).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn correlation_matrix_reference_cases() {
        let x = vec![1.0, 2.0, 3.0];
        let cols = vec![
            ("x".to_string(), x.clone()),
            ("neg".to_string(), x.iter().map(|v| -v).collect()),
            ("y".to_string(), vec![2.0, 4.0, 6.1]),
            ("flat".to_string(), vec![5.0, 5.0, 5.0]),
        ];
        let m = correlation_matrix(&cols).unwrap();
        assert_eq!(m.values[0][0], Some(1.0));
        assert!((m.values[0][1].unwrap() + 1.0).abs() < 1e-12);
        assert!((m.values[0][2].unwrap() - 0.999900867409917528).abs() < 1e-12);
        assert_eq!(m.values[0][3], None);
        assert_eq!(m.values[3][3], None);
        assert_eq!(m.constant_columns, vec!["flat".to_string()]);
    }

    #[test]
    fn descriptive_stats_reference_cases() {
        let stats = descriptive_stats(&[("b".into(), vec![0.0, 1.0, 1.0])]).unwrap();
        assert!((stats[0].mean - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats[0].min, 0.0);
        assert_eq!(stats[0].max, 1.0);

        let constant = descriptive_stats(&[("c".into(), vec![3.0; 8])]).unwrap();
        assert_eq!(constant[0].std_dev, 0.0);

        // Binary column with mean 0.58 at N = 196.
        let mut col = vec![1.0; 114];
        col.extend(vec![0.0; 82]);
        let stats = descriptive_stats(&[("nj".into(), col)]).unwrap();
        assert!((stats[0].mean - 114.0 / 196.0).abs() < 1e-12);
        assert!((stats[0].std_dev - 0.494822423470512065).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn chi2_depends_only_on_likelihood_difference(
            llr in -2000.0f64..-10.0,
            gap in 0.0f64..500.0,
            shift in -300.0f64..300.0,
        ) {
            let a = likelihood_ratio_test(llr + gap, llr, 3, &[]).unwrap();
            let llr2 = llr + shift;
            let b = likelihood_ratio_test(llr2 + gap, llr2, 3, &[]).unwrap();
            prop_assert!((a.chi2 - b.chi2).abs() < 1e-8);
        }

        #[test]
        fn correlation_is_affine_invariant(
            base in proptest::collection::vec(-50.0f64..50.0, 4..30),
            scale in 0.01f64..40.0,
            offset in -100.0f64..100.0,
        ) {
            let other: Vec<f64> = base.iter().enumerate().map(|(i, v)| v * 0.7 + (i as f64).sin()).collect();
            let rescaled: Vec<f64> = base.iter().map(|v| v * scale + offset).collect();
            let m1 = correlation_matrix(&[("a".into(), base.clone()), ("b".into(), other.clone())]).unwrap();
            let m2 = correlation_matrix(&[("a".into(), rescaled), ("b".into(), other)]).unwrap();
            match (m1.values[0][1], m2.values[0][1]) {
                (Some(r1), Some(r2)) => prop_assert!((r1 - r2).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
            }
        }

        #[test]
        fn ordinal_effect_triples_sum_to_zero(
            b0 in -1.5f64..1.5,
            bk in -2.0f64..2.0,
            mu1 in 0.05f64..1.5,
            xk in 0.0f64..1.0,
        ) {
            let theta = ParameterVector::new(vec![0.0], vec![b0, bk], 1.0, mu1, 0.0).unwrap();
            let data = single_row_dataset(vec![1.0], vec![1.0, xk]);
            let eff = ordinal_marginal_effect(&data, &theta, "x1").unwrap();
            let sum: f64 = eff.effects.iter().sum();
            prop_assert!(sum.abs() < 1e-12);
            // The probabilities behind the effects partition unity.
            let probs = ordinal_category_probabilities(b0 + bk * xk, mu1);
            prop_assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
