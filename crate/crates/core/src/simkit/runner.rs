use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::generate::generate_dataset;
use super::oracle::{hazard_ratio_at, resolve_tau, true_rmst_difference, TrueEffect};
use crate::design::{empirical_correlation_profile, weighted_correlation, WeightPairing};
use crate::error::{Result, RmstError};
use crate::pseudo::pseudovalues_fast;
use crate::regress::{fit_pseudovalue_ols, wald, wald_treatment_effect, DesignMatrix, HcVariant};
use crate::stats::{self, pearson, KahanSum};
use crate::survival::km_rmst_difference;

/// Largest tolerated fraction of replicates failing on `tau`.
const MAX_FAILED_FRACTION: f64 = 0.001;

/// Per-replicate results of both estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub km_estimate: f64,
    pub km_std_err: f64,
    pub km_covers: bool,
    pub km_reject: bool,
    pub pv_estimate: f64,
    pub pv_std_err: f64,
    pub pv_covers: bool,
    pub pv_reject: bool,
    /// `σ̂²ε` of the adjusted fit.
    pub residual_var: f64,
    /// Sample variance of the pooled pseudovalues.
    pub pseudo_var: f64,
    /// Correlation of pseudovalues with the latent covariate, arms pooled.
    pub r_pooled: f64,
    /// Arm-weighted correlation `(1 - π) r1 + π r0`.
    pub r_weighted: f64,
    pub r0: f64,
    pub r1: f64,
    /// Same, against the observed covariate.
    pub r_pooled_observed: f64,
    pub r_weighted_observed: f64,
    pub r0_observed: f64,
    pub r1_observed: f64,
    /// Percent of subjects censored before `tau`.
    pub pct_censored: f64,
    /// Percent of subjects still at risk at `tau`.
    pub pct_truncated: f64,
}

/// Analyses replicate `index` of `config` at `tau` against the true effect.
pub fn run_replicate(config: &ScenarioConfig, tau: f64, true_effect: f64, index: u64) -> Result<ReplicateOutcome> {
    let data = generate_dataset(config, index);
    let n = data.samples.len() as f64;
    let alpha = 1.0 - config.level;

    let km = km_rmst_difference(&data.samples, tau)?;
    let km_wald = wald(km.estimate, km.std_err, config.level)?;

    let pv = pseudovalues_fast(&data.samples, tau)?;
    let design = DesignMatrix::treatment_with_covariates(&data.treatment_indicator(), &[data.observed.clone()])?;
    let fit = fit_pseudovalue_ols(&design, &pv, HcVariant::HC1)?;
    let pv_wald = wald_treatment_effect(&fit, config.level)?;

    let arms = data.arms();
    let latent = empirical_correlation_profile(&pv, &data.latent, &arms)?;
    let observed = empirical_correlation_profile(&pv, &data.observed, &arms)?;

    let censored = data.samples.iter().filter(|s| !s.event && s.time < tau).count();
    let truncated = data.samples.iter().filter(|s| s.time >= tau).count();

    Ok(ReplicateOutcome {
        km_estimate: km.estimate,
        km_std_err: km.std_err,
        km_covers: km_wald.covers(true_effect),
        km_reject: km_wald.p_value < alpha,
        pv_estimate: pv_wald.estimate,
        pv_std_err: pv_wald.std_err,
        pv_covers: pv_wald.covers(true_effect),
        pv_reject: pv_wald.p_value < alpha,
        residual_var: fit.residual_var,
        pseudo_var: stats::variance(&pv.values),
        r_pooled: pearson(&pv.values, &data.latent).unwrap_or(0.0),
        r_weighted: weighted_correlation(&latent, WeightPairing::AsPrinted),
        r0: latent.r0,
        r1: latent.r1,
        r_pooled_observed: pearson(&pv.values, &data.observed).unwrap_or(0.0),
        r_weighted_observed: weighted_correlation(&observed, WeightPairing::AsPrinted),
        r0_observed: observed.r0,
        r1_observed: observed.r1,
        pct_censored: 100.0 * censored as f64 / n,
        pct_truncated: 100.0 * truncated as f64 / n,
    })
}

/// Raw replicate outcomes of one scenario, in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub tau: f64,
    pub truth: TrueEffect,
    pub outcomes: Vec<ReplicateOutcome>,
    /// Replicates dropped because `tau` was beyond a subsample's data.
    pub failed: usize,
}

/// Runs every replicate of `config`. `threads` sets the worker count;
/// `None` uses the global pool. Results do not depend on it.
pub fn run_replicates(config: &ScenarioConfig, threads: Option<usize>) -> Result<ScenarioRun> {
    config.validate()?;
    let tau = resolve_tau(config);
    let truth = true_rmst_difference(config, tau);
    let work = || -> Vec<Result<ReplicateOutcome>> {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|i| run_replicate(config, tau, truth.value, i))
            .collect()
    };
    let results = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| RmstError::invalid(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failed = 0;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e @ RmstError::RestrictionTimeBeyondData { .. }) => {
                failed += 1;
                first_error.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let limit = (MAX_FAILED_FRACTION * config.replicates as f64).floor() as usize;
    if failed > limit || outcomes.is_empty() {
        return Err(RmstError::TooManyFailedReplicates {
            failed,
            replicates: config.replicates,
            limit,
            first_error: first_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok(ScenarioRun {
        config: config.clone(),
        tau,
        truth,
        outcomes,
        failed,
    })
}

/// Aggregated metrics in the layout of the published tables. Variance-based
/// fields are `None` when fewer than two replicates succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub config: ScenarioConfig,
    pub replicates_used: usize,
    pub failed_replicates: usize,
    pub tau: f64,
    pub true_effect: f64,
    pub true_effect_std_err: f64,
    pub km_mean: f64,
    pub pv_mean: f64,
    pub km_bias: f64,
    pub pv_bias: f64,
    pub km_variance: Option<f64>,
    pub pv_variance: Option<f64>,
    /// `1 - Var(pv estimates) / Var(km estimates)`.
    pub variance_reduction: Option<f64>,
    pub km_coverage: f64,
    pub pv_coverage: f64,
    pub km_rejection_rate: f64,
    pub pv_rejection_rate: f64,
    pub km_mean_std_err: f64,
    pub pv_mean_std_err: f64,
    /// Mean `σ̂²ε` of the adjusted fits.
    pub mean_residual_var: f64,
    pub mean_pseudo_var: f64,
    pub r_pooled: f64,
    pub r_weighted: f64,
    pub r0: f64,
    pub r1: f64,
    /// `r_pooled²`, the predicted reduction.
    pub predicted_reduction: f64,
    pub r_pooled_observed: f64,
    pub r_weighted_observed: f64,
    pub r0_observed: f64,
    pub r1_observed: f64,
    pub predicted_reduction_observed: f64,
    pub pct_censored: f64,
    pub pct_truncated: f64,
    /// Marginal hazard ratio at the control-arm median; informational.
    pub median_hazard_ratio: f64,
}

fn mean_of(outcomes: &[ReplicateOutcome], f: impl Fn(&ReplicateOutcome) -> f64) -> f64 {
    let s: KahanSum = outcomes.iter().map(f).collect();
    s.value() / outcomes.len() as f64
}

fn rate(outcomes: &[ReplicateOutcome], f: impl Fn(&ReplicateOutcome) -> bool) -> f64 {
    outcomes.iter().filter(|o| f(o)).count() as f64 / outcomes.len() as f64
}

pub fn summarize(run: &ScenarioRun) -> ScenarioResult {
    let o = &run.outcomes;
    let km: Vec<f64> = o.iter().map(|x| x.km_estimate).collect();
    let pv: Vec<f64> = o.iter().map(|x| x.pv_estimate).collect();
    let (km_variance, pv_variance) = if o.len() >= 2 {
        (Some(stats::variance(&km)), Some(stats::variance(&pv)))
    } else {
        (None, None)
    };
    let variance_reduction = match (km_variance, pv_variance) {
        (Some(k), Some(p)) if k > 0.0 => Some(1.0 - p / k),
        _ => None,
    };
    let km_mean = stats::mean(&km);
    let pv_mean = stats::mean(&pv);
    let r_pooled = mean_of(o, |x| x.r_pooled);
    let r_pooled_observed = mean_of(o, |x| x.r_pooled_observed);
    let control_median = resolve_tau(&ScenarioConfig {
        tau_quantile: 0.5,
        tau_link: None,
        ..run.config.clone()
    });
    ScenarioResult {
        name: run.config.name.clone(),
        config: run.config.clone(),
        replicates_used: o.len(),
        failed_replicates: run.failed,
        tau: run.tau,
        true_effect: run.truth.value,
        true_effect_std_err: run.truth.std_err,
        km_mean,
        pv_mean,
        km_bias: km_mean - run.truth.value,
        pv_bias: pv_mean - run.truth.value,
        km_variance,
        pv_variance,
        variance_reduction,
        km_coverage: rate(o, |x| x.km_covers),
        pv_coverage: rate(o, |x| x.pv_covers),
        km_rejection_rate: rate(o, |x| x.km_reject),
        pv_rejection_rate: rate(o, |x| x.pv_reject),
        km_mean_std_err: mean_of(o, |x| x.km_std_err),
        pv_mean_std_err: mean_of(o, |x| x.pv_std_err),
        mean_residual_var: mean_of(o, |x| x.residual_var),
        mean_pseudo_var: mean_of(o, |x| x.pseudo_var),
        r_pooled,
        r_weighted: mean_of(o, |x| x.r_weighted),
        r0: mean_of(o, |x| x.r0),
        r1: mean_of(o, |x| x.r1),
        predicted_reduction: r_pooled * r_pooled,
        r_pooled_observed,
        r_weighted_observed: mean_of(o, |x| x.r_weighted_observed),
        r0_observed: mean_of(o, |x| x.r0_observed),
        r1_observed: mean_of(o, |x| x.r1_observed),
        predicted_reduction_observed: r_pooled_observed * r_pooled_observed,
        pct_censored: mean_of(o, |x| x.pct_censored),
        pct_truncated: mean_of(o, |x| x.pct_truncated),
        median_hazard_ratio: hazard_ratio_at(&run.config, control_median),
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    run_scenario_with_threads(config, None)
}

pub fn run_scenario_with_threads(config: &ScenarioConfig, threads: Option<usize>) -> Result<ScenarioResult> {
    Ok(summarize(&run_replicates(config, threads)?))
}
