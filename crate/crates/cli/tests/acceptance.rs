//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (visible with `--nocapture`). Every tolerance is pinned
//! in the assertions.
//!
//! Run with: cargo test -p durprobit-cli --test acceptance -- --nocapture

use std::collections::BTreeMap;
use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use statrs::distribution::ContinuousCDF;

use durprobit::{
    adjusted_rho_squared, estimate, iqv, joint_log_density_at, likelihood_ratio_test,
    log_likelihood_gradient, marginal_effects, ordinal_category_probabilities,
    ordinal_marginal_effect, recovery_experiment, simulate_dataset, std_normal_pdf,
    total_log_likelihood, AttributeValue, CovariateGenerator, CovariateSpec,
    Dataset, DurationScale, EgoNetwork, ModelSpec, ParameterVector, SimulationConfig,
};

fn pass(criterion: usize, label: &str, detail: String) {
    println!("[acceptance] criterion {criterion} ({label}): PASS - {detail}");
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_durprobit"))
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn bernoulli_config(
    duration: &[(&str, f64)],
    ordinal: &[(&str, f64)],
    theta: ParameterVector,
    n_obs: usize,
    seed: u64,
) -> SimulationConfig {
    let spec = ModelSpec::new(
        duration.iter().map(|(n, _)| n.to_string()).collect(),
        ordinal.iter().map(|(n, _)| n.to_string()).collect(),
    )
    .unwrap();
    let mut covariates: Vec<CovariateSpec> = Vec::new();
    for (name, p) in duration.iter().chain(ordinal.iter()) {
        if !covariates.iter().any(|c| c.name == *name) {
            covariates.push(CovariateSpec {
                name: name.to_string(),
                generator: CovariateGenerator::Bernoulli { p: *p },
            });
        }
    }
    SimulationConfig {
        spec,
        theta,
        covariates,
        n_obs,
        seed,
        check_category_scheme: true,
    }
}

// ---------------------------------------------------------------------------
// 1. Fit-statistic reproduction
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_fit_statistic_reproduction() {
    let lr = likelihood_ratio_test(-1071.40, -1157.91, 13, &[0.9999]).unwrap();
    assert!((lr.chi2 - 173.02).abs() <= 0.01, "chi2 {}", lr.chi2);
    let rho2 = adjusted_rho_squared(-1071.40, -1157.91, 13).unwrap();
    assert!((rho2 - 0.0635).abs() <= 0.0005, "adjusted rho^2 {rho2}");

    // The CLI report must carry the same numbers and footnote the rounded
    // 0.1 convention.
    let out = binary()
        .args(["gof", "--llb", "-1071.40", "--llr", "-1157.91", "--k", "13"])
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("173.020"), "{text}");
    assert!(text.contains("0.0634851"), "{text}");
    assert!(text.contains("0.1"), "{text}");
    pass(1, "fit statistics", format!("chi2 {} adjusted rho^2 {rho2:.6}", lr.chi2));
}

// ---------------------------------------------------------------------------
// 2. rho = 0 factorization
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_rho_zero_factorization() {
    let mut rng = ChaCha12Rng::seed_from_u64(20_250_002);
    let mut worst = 0.0f64;
    for draw in 0..20 {
        let p_extra = rng.gen_range(1..=3usize);
        let q_extra = rng.gen_range(1..=3usize);
        let gamma: Vec<f64> = std::iter::once(uniform(&mut rng, 0.0, 2.0))
            .chain((0..p_extra).map(|_| uniform(&mut rng, -1.0, 1.0)))
            .collect();
        let beta: Vec<f64> = std::iter::once(uniform(&mut rng, -1.0, 1.0))
            .chain((0..q_extra).map(|_| uniform(&mut rng, -1.0, 1.0)))
            .collect();
        let theta = ParameterVector::new(
            gamma,
            beta,
            uniform(&mut rng, 0.3, 1.5),
            uniform(&mut rng, 0.2, 1.2),
            0.0,
        )
        .unwrap();
        let duration: Vec<(String, f64)> = (0..p_extra)
            .map(|i| (format!("d{i}"), uniform(&mut rng, 0.2, 0.8)))
            .collect();
        let ordinal: Vec<(String, f64)> = (0..q_extra)
            .map(|i| (format!("o{i}"), uniform(&mut rng, 0.2, 0.8)))
            .collect();
        let duration_refs: Vec<(&str, f64)> =
            duration.iter().map(|(n, p)| (n.as_str(), *p)).collect();
        let ordinal_refs: Vec<(&str, f64)> =
            ordinal.iter().map(|(n, p)| (n.as_str(), *p)).collect();
        let config = bernoulli_config(&duration_refs, &ordinal_refs, theta.clone(), 500, 900 + draw);
        let data = simulate_dataset(&config).unwrap();

        let joint = total_log_likelihood(&data, &theta).unwrap();
        for (i, obs) in data.observations().iter().enumerate() {
            // Standalone lognormal accelerated-time log density.
            let gy: f64 = data
                .y()
                .row(i)
                .iter()
                .zip(&theta.gamma)
                .map(|(v, g)| v * g)
                .sum();
            let z = (obs.departure_hours.ln() - gy) / theta.sigma;
            let aft = -obs.departure_hours.ln() - theta.sigma.ln()
                + std_normal_pdf(z).ln();
            // Standalone ordered-probit log probability.
            let bx: f64 = data
                .x()
                .row(i)
                .iter()
                .zip(&theta.beta)
                .map(|(v, b)| v * b)
                .sum();
            let probs = ordinal_category_probabilities(bx, theta.mu1);
            let probit = probs[(obs.travel_category - 1) as usize].ln();
            let diff = (joint.per_observation[i] - (aft + probit)).abs();
            worst = worst.max(diff);
            assert!(
                diff <= 1e-10,
                "draw {draw}, observation {i}: joint {} vs standalone {}",
                joint.per_observation[i],
                aft + probit
            );
        }
    }
    pass(2, "rho=0 factorization", format!("20 draws x 500 obs, worst |diff| {worst:.2e}"));
}

// ---------------------------------------------------------------------------
// 3. Density normalization
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_density_normalization() {
    let mut rng = ChaCha12Rng::seed_from_u64(20_250_003);
    let mut worst = 0.0f64;
    for draw in 0..10 {
        let theta = ParameterVector::new(
            vec![uniform(&mut rng, -0.5, 2.5)],
            vec![uniform(&mut rng, -1.0, 1.0)],
            uniform(&mut rng, 0.3, 1.8),
            uniform(&mut rng, 0.2, 1.2),
            uniform(&mut rng, -0.9, 0.9),
        )
        .unwrap();
        let location = theta.gamma[0];
        // Integrate d over (0, exp(location + 6 sigma)] in sigma-width
        // panels of t = ln d, so the adaptive pass cannot overlook the
        // density peak inside a wide interval.
        let total: f64 = (1..=3u8)
            .map(|category| {
                let integrand = |t: f64| {
                    joint_log_density_at(t.exp(), category, &[1.0], &[1.0], &theta)
                        .unwrap()
                        .log_density
                        .exp()
                        * t.exp()
                };
                (-12..6)
                    .map(|j| {
                        let lo = location + j as f64 * theta.sigma;
                        adaptive_simpson(&integrand, lo, lo + theta.sigma, 1e-10)
                    })
                    .sum::<f64>()
            })
            .sum();
        worst = worst.max((total - 1.0).abs());
        assert!(
            (total - 1.0).abs() <= 1e-6,
            "draw {draw}: sum of category integrals {total}"
        );
    }
    pass(3, "density normalization", format!("10 thetas, worst |total-1| {worst:.2e}"));
}

// ---------------------------------------------------------------------------
// 4. Gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_gradient_matches_finite_differences() {
    let truth = ParameterVector::new(
        vec![4.36, -0.25, -0.29],
        vec![-0.95, 0.76, -0.70],
        0.49,
        0.41,
        -0.24,
    )
    .unwrap();
    let config = bernoulli_config(
        &[("a", 0.58), ("b", 0.86)],
        &[("c", 0.88), ("d", 0.12)],
        truth,
        200,
        20_250_004,
    );
    let data = simulate_dataset(&config).unwrap();

    let mut rng = ChaCha12Rng::seed_from_u64(44);
    let mut worst = 0.0f64;
    for point in 0..20 {
        let theta = ParameterVector::new(
            vec![
                uniform(&mut rng, 3.0, 5.0),
                uniform(&mut rng, -0.8, 0.8),
                uniform(&mut rng, -0.8, 0.8),
            ],
            vec![
                uniform(&mut rng, -1.5, 0.5),
                uniform(&mut rng, -1.0, 1.0),
                uniform(&mut rng, -1.0, 1.0),
            ],
            uniform(&mut rng, 0.3, 1.2),
            uniform(&mut rng, 0.2, 1.0),
            uniform(&mut rng, -0.8, 0.8),
        )
        .unwrap();
        let analytic = log_likelihood_gradient(&data, &theta).unwrap();
        let fd = finite_difference_gradient(&data, &theta);
        for (k, (a, f)) in analytic.iter().zip(&fd).enumerate() {
            let err = (a - f).abs() / a.abs().max(1.0);
            worst = worst.max(err);
            assert!(
                err <= 1e-4,
                "point {point} coordinate {k}: analytic {a}, fd {f}"
            );
        }
    }
    pass(4, "gradient correctness", format!("20 points, worst relative error {worst:.2e}"));
}

fn finite_difference_gradient(data: &Dataset, theta: &ParameterVector) -> Vec<f64> {
    let p = theta.gamma.len();
    let q = theta.beta.len();
    let mut z = theta.to_flat();
    z[p + q] = z[p + q].ln();
    z[p + q + 1] = z[p + q + 1].ln();
    z[p + q + 2] = z[p + q + 2].atanh();
    let eval = |point: &[f64]| -> f64 {
        let mut flat = point.to_vec();
        flat[p + q] = flat[p + q].exp();
        flat[p + q + 1] = flat[p + q + 1].exp();
        flat[p + q + 2] = flat[p + q + 2].tanh();
        let th = ParameterVector::from_flat(&flat, p, q).unwrap();
        total_log_likelihood(data, &th).unwrap().log_likelihood
    };
    (0..z.len())
        .map(|k| {
            let h = 1e-6 * z[k].abs().max(1.0);
            let mut hi = z.clone();
            let mut lo = z.clone();
            hi[k] += h;
            lo[k] -= h;
            (eval(&hi) - eval(&lo)) / (2.0 * h)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 5. Parameter recovery at N = 20,000
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_parameter_recovery() {
    let theta = ParameterVector::new(
        vec![4.36, -0.25, -0.29, -0.18, 0.16, -0.51, 0.22],
        vec![-0.95, 0.76, -0.70, -0.65, -0.58, 0.14, -0.64],
        0.49,
        0.41,
        -0.24,
    )
    .unwrap();
    let spec = ModelSpec::new(
        vec!["nj", "stormconcern", "ordered_sufinfo", "old_loctv", "household1_reco", "agehet"],
        vec!["loctv", "widow", "married_evacbefore", "household1_concern", "np", "sexhet"],
    )
    .unwrap();
    let bernoulli = |name: &str, p: f64| CovariateSpec {
        name: name.into(),
        generator: CovariateGenerator::Bernoulli { p },
    };
    let config = SimulationConfig {
        spec,
        theta: theta.clone(),
        covariates: vec![
            bernoulli("nj", 0.58),
            bernoulli("stormconcern", 0.86),
            bernoulli("ordered_sufinfo", 0.44),
            bernoulli("old_loctv", 0.55),
            bernoulli("household1_reco", 0.05),
            bernoulli("agehet", 0.08),
            bernoulli("loctv", 0.88),
            bernoulli("widow", 0.12),
            bernoulli("married_evacbefore", 0.23),
            bernoulli("household1_concern", 0.23),
            CovariateSpec {
                name: "np".into(),
                generator: CovariateGenerator::UniformInt { low: 0, high: 6 },
            },
            bernoulli("sexhet", 0.14),
        ],
        n_obs: 20_000,
        seed: 20_250_005,
        check_category_scheme: true,
    };
    let data = simulate_dataset(&config).unwrap();
    let result = estimate(&data, &config.spec).unwrap();
    assert!(result.convergence.converged);
    let ses = result.std_errors.as_ref().expect("standard errors");
    let estimates = result.theta.to_flat();
    let truth = theta.to_flat();
    let mut worst = 0.0f64;
    for j in 0..truth.len() {
        let tol = (3.0 * ses[j]).max(0.05);
        let err = (estimates[j] - truth[j]).abs();
        worst = worst.max(err / tol);
        assert!(
            err <= tol,
            "{}: estimate {} vs truth {} (tol {tol})",
            result.parameter_names[j],
            estimates[j],
            truth[j]
        );
    }
    pass(5, "parameter recovery", format!(
        "17 parameters at N=20000, worst |error|/tol {worst:.2}"
    ));
}

// ---------------------------------------------------------------------------
// 6. Standard-error calibration over 50 replications
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_standard_error_calibration() {
    let theta = ParameterVector::new(
        vec![4.36, -0.25, -0.29],
        vec![-0.95, 0.76, -0.70],
        0.49,
        0.41,
        -0.24,
    )
    .unwrap();
    let config = bernoulli_config(
        &[("a", 0.58), ("b", 0.86)],
        &[("c", 0.88), ("d", 0.30)],
        theta,
        5_000,
        20_250_006,
    );
    let report = recovery_experiment(&config, 50).unwrap();
    assert_eq!(report.n_failures, 0, "failures: {:?}", report.failures);

    // 99% two-sided binomial band around 0.95 coverage with n = 50:
    // 47.5 +/- 2.5758 * sqrt(50 * 0.95 * 0.05) -> counts 44..=50.
    let mut details = Vec::new();
    for name in ["sigma", "mu1", "rho"] {
        let p = report
            .parameters
            .iter()
            .find(|p| p.name == name)
            .expect("ancillary parameter");
        assert!(
            (0.8..=1.2).contains(&p.se_ratio),
            "{name}: empirical sd / mean SE = {}",
            p.se_ratio
        );
        assert!(
            (44..=50).contains(&p.coverage_count),
            "{name}: coverage {} of {}",
            p.coverage_count,
            p.coverage_n
        );
        assert!(p.bias.abs() <= 0.02, "{name}: mean bias {}", p.bias);
        details.push(format!(
            "{name} ratio {:.3} coverage {}/50 bias {:+.4}",
            p.se_ratio, p.coverage_count, p.bias
        ));
    }
    pass(6, "SE calibration", details.join(", "));
}

// ---------------------------------------------------------------------------
// 7. Simulator-likelihood consistency at N = 1,000,000
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_simulator_likelihood_consistency() {
    let theta =
        ParameterVector::new(vec![1.2], vec![-0.2], 0.49, 0.41, -0.24).unwrap();
    let spec = ModelSpec::new(Vec::<String>::new(), Vec::<String>::new()).unwrap();
    let config = SimulationConfig {
        spec,
        theta: theta.clone(),
        covariates: vec![],
        n_obs: 1_000_000,
        seed: 20_250_007,
        check_category_scheme: true,
    };
    let data = simulate_dataset(&config).unwrap();
    let n = data.n_obs() as f64;

    // Decile edges of the marginal lognormal ln d ~ N(1.2, 0.49^2).
    let normal = statrs::distribution::Normal::standard();
    let edges: Vec<f64> = (1..10)
        .map(|k| (1.2 + 0.49 * normal.inverse_cdf(k as f64 / 10.0)).exp())
        .collect();
    let bin_of = |d: f64| edges.iter().position(|e| d <= *e).unwrap_or(9);

    let mut counts = [[0usize; 3]; 10];
    for obs in data.observations() {
        counts[bin_of(obs.departure_hours)][(obs.travel_category - 1) as usize] += 1;
    }

    // Cell probabilities by quadrature of the joint density over each bin.
    let t_low = 1.2 - 12.0 * 0.49;
    let t_high = 1.2 + 12.0 * 0.49;
    let mut worst_sigma = 0.0f64;
    let mut total_prob = 0.0f64;
    for bin in 0..10 {
        let lo = if bin == 0 { t_low } else { edges[bin - 1].ln() };
        let hi = if bin == 9 { t_high } else { edges[bin].ln() };
        for category in 1..=3u8 {
            // Integrate in t = ln d; the e^t Jacobian cancels the 1/d factor.
            let integrand = |t: f64| {
                joint_log_density_at(t.exp(), category, &[1.0], &[1.0], &theta)
                    .unwrap()
                    .log_density
                    .exp()
                    * t.exp()
            };
            let prob = adaptive_simpson(&integrand, lo, hi, 1e-10);
            total_prob += prob;
            let expected = n * prob;
            let sd = (n * prob * (1.0 - prob)).sqrt();
            let observed = counts[bin][(category - 1) as usize] as f64;
            let sigmas = (observed - expected).abs() / sd;
            worst_sigma = worst_sigma.max(sigmas);
            assert!(
                sigmas <= 3.0,
                "bin {bin} category {category}: observed {observed}, expected {expected:.1} ({sigmas:.2} sd)"
            );
        }
    }
    assert!((total_prob - 1.0).abs() < 1e-6, "cells sum to {total_prob}");
    pass(7, "simulator-likelihood consistency", format!(
        "30 cells at N=1e6, worst deviation {worst_sigma:.2} binomial sd"
    ));
}

// ---------------------------------------------------------------------------
// 8. Marginal-effect identities
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_marginal_effect_identities() {
    let theta = ParameterVector::new(
        vec![4.36, -0.25, -0.29],
        vec![-0.95, 0.76, -0.70],
        0.49,
        0.41,
        -0.24,
    )
    .unwrap();
    let config = bernoulli_config(
        &[("a", 0.58), ("b", 0.86)],
        &[("c", 0.88), ("d", 0.30)],
        theta,
        2_000,
        20_250_008,
    );
    let data = simulate_dataset(&config).unwrap();
    let result = estimate(&data, &config.spec).unwrap();
    assert!(result.convergence.converged);

    let effects = marginal_effects(&data, &result.theta, DurationScale::Mean).unwrap();
    let mut worst = 0.0f64;
    for effect in &effects.ordinal_effects {
        let sum: f64 = effect.effects.iter().sum();
        worst = worst.max(sum.abs());
        assert!(sum.abs() <= 1e-10, "{}: triple sums to {sum}", effect.covariate);
    }

    // Zero coefficients give exactly zero effects.
    let mut zeroed = result.theta.clone();
    zeroed.gamma[1] = 0.0;
    zeroed.beta[1] = 0.0;
    let duration_zero =
        durprobit::duration_marginal_effect(&data, &zeroed, "a", DurationScale::Mean).unwrap();
    assert_eq!(duration_zero.effect_hours, 0.0);
    let ordinal_zero = ordinal_marginal_effect(&data, &zeroed, "c").unwrap();
    assert_eq!(ordinal_zero.effects, [0.0, 0.0, 0.0]);
    pass(8, "marginal-effect identities", format!(
        "triples sum to 0 (worst {worst:.2e}); zero coefficients exact"
    ));
}

// ---------------------------------------------------------------------------
// 9. Network metrics
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_network_metrics() {
    let roster = |counts: &[usize]| -> EgoNetwork {
        let mut network = EgoNetwork::new("ego");
        for (category, count) in counts.iter().enumerate() {
            for _ in 0..*count {
                let mut attrs = BTreeMap::new();
                attrs.insert(
                    "sex".to_string(),
                    AttributeValue::Label(format!("cat{category}")),
                );
                network.alters.push(attrs);
            }
        }
        network
    };

    let even = iqv(&roster(&[2, 2]), "sex", Some(2)).unwrap().value.unwrap();
    assert!((even - 1.0).abs() <= 1e-12);
    let degenerate = iqv(&roster(&[5, 0]), "sex", Some(2)).unwrap().value.unwrap();
    assert!(degenerate.abs() <= 1e-12);
    let seventy_thirty = iqv(&roster(&[7, 3]), "sex", Some(2)).unwrap().value.unwrap();
    assert!((seventy_thirty - 0.84).abs() <= 1e-12);

    // Pair-counting oracle over every roster of size <= 10 with 2 or 3
    // categories: unlike pairs / even-split maximum pairs.
    let mut checked = 0usize;
    for c in [2usize, 3] {
        for n in 1usize..=10 {
            for counts in compositions(n, c) {
                let value = iqv(&roster(&counts), "sex", Some(c))
                    .unwrap()
                    .value
                    .unwrap();
                let unlike = (n * n - counts.iter().map(|k| k * k).sum::<usize>()) as f64 / 2.0;
                let max_unlike = (n as f64).powi(2) * (c as f64 - 1.0) / (2.0 * c as f64);
                assert!(
                    (value - unlike / max_unlike).abs() <= 1e-12,
                    "counts {counts:?}: iqv {value} vs pairs {}",
                    unlike / max_unlike
                );
                checked += 1;
            }
        }
    }
    pass(9, "network metrics", format!(
        "reference IQVs exact; pair-counting oracle over {checked} rosters"
    ));
}

fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 10. Fixed-seed determinism of the CLI
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
[model]
duration_covariates = ["a"]
ordinal_covariates = ["c"]

[estimation]
seed = 1

[simulation]
n_obs = 500
seed = 10

[simulation.truth]
gamma = [4.36, -0.25]
beta = [-0.95, 0.76]
sigma = 0.49
mu1 = 0.41
rho = -0.24

[[simulation.covariates]]
name = "a"
type = "bernoulli"
p = 0.58

[[simulation.covariates]]
name = "c"
type = "bernoulli"
p = 0.88
"#,
    )
    .unwrap();

    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for out in [&csv_a, &csv_b] {
        let status = binary()
            .args([
                "simulate",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap(),
        "simulate must be byte-identical across runs"
    );

    let mut reports = Vec::new();
    for format in ["text", "json"] {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = binary()
                .args([
                    "estimate",
                    "--data",
                    csv_a.to_str().unwrap(),
                    "--config",
                    config_path.to_str().unwrap(),
                    "--format",
                    format,
                ])
                .output()
                .unwrap();
            assert!(out.status.success());
            outputs.push(out.stdout);
        }
        assert_eq!(outputs[0], outputs[1], "{format} report must be byte-identical");
        reports.push(outputs.remove(0));
    }
    pass(10, "CLI determinism", format!(
        "simulate CSV and estimate reports byte-identical ({} and {} bytes)",
        reports[0].len(),
        reports[1].len()
    ));
}
