//! Joint estimation of a continuous departure duration and an ordinal travel
//! class whose errors are correlated.
//!
//! The duration follows a lognormal accelerated-time specification
//! `ln d = gamma.y + alpha` and the ordinal outcome an ordered probit with
//! latent index `beta.x + eps`; `corr(alpha/sigma, eps) = rho` couples the
//! two equations and the whole parameter set is estimated by
//! full-information maximum likelihood. The crate also ships the
//! post-estimation toolkit (marginal effects, likelihood-ratio fit measures,
//! correlation and descriptive tables), ego-network heterogeneity metrics,
//! and a simulator used for parameter-recovery studies.

pub mod error;
pub mod estimate;
pub mod inference;
pub mod likelihood;
pub mod model;
pub mod network;
mod optim;
pub mod simulate;

pub use error::{Error, Result};
pub use estimate::{
    estimate, inverse_reparameterize, reparameterize, standard_errors, ConvergenceInfo,
    ConvergenceReason, CurvatureDiagnostics, Diagnostics, EstimationResult, StandardErrors,
    StartTrace,
};
pub use inference::{
    adjusted_rho_squared, correlation_matrix, descriptive_stats, duration_marginal_effect,
    fit_report, likelihood_ratio_test, marginal_effects, ordinal_marginal_effect, ColumnStats,
    CorrelationMatrix, CriticalValueComparison, DurationEffect, DurationScale, EffectMethod,
    FitReport, LikelihoodRatioTest, MarginalEffectsReport, OrdinalEffect,
};
pub use likelihood::{
    joint_log_density, joint_log_density_at, log_likelihood_gradient,
    log_likelihood_gradient_original, log_likelihood_with_gradient, ordinal_category_probabilities,
    std_normal_cdf, std_normal_cdf_diff, std_normal_pdf, total_log_likelihood, DensityEval,
    LikelihoodValue, ParameterVector,
};
pub use model::{
    build_design_matrices, categorize_travel_time, make_interaction, make_threshold_indicator,
    ColumnTransform, Dataset, DerivedColumn, DesignMatrix, DroppedRow, EstimationSettings,
    ModelSpec, Observation, INTERCEPT_NAME,
};
pub use network::{
    continuous_heterogeneity, iqv, AttributeValue, EgoNetwork, HeterogeneityResult, IqvResult,
};
pub use simulate::{
    draw_correlated_errors, recovery_experiment, simulate_dataset, CovariateGenerator,
    CovariateSpec, ParameterRecovery, RecoveryReport, SimulationConfig,
};
