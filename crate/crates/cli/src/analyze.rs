use serde::{Deserialize, Serialize};

use rmst_core::design::{empirical_correlation_profile, predict_variance_reduction, CorrelationProfile};
use rmst_core::pseudo::pseudovalues_fast;
use rmst_core::regress::{fit_pseudovalue_ols, wald, wald_treatment_effect, ColumnRole, DesignMatrix, HcVariant};
use rmst_core::survival::km_rmst_difference;
use rmst_core::Arm;

use crate::data::Dataset;
use crate::error::Result;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub estimate: f64,
    pub std_err: f64,
    pub ci: [f64; 2],
    pub p_value: f64,
}

impl From<rmst_core::regress::WaldResult> for EffectSummary {
    fn from(w: rmst_core::regress::WaldResult) -> Self {
        EffectSummary {
            estimate: w.estimate,
            std_err: w.std_err,
            ci: [w.ci_low, w.ci_high],
            p_value: w.p_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tau: f64,
    pub n: usize,
    /// Events at or before `tau`.
    pub n_events: usize,
    /// Censored before `tau`.
    pub n_censored: usize,
    /// Everyone else: still under observation at `tau`.
    pub n_at_risk_at_tau: usize,
    pub covariates: Vec<String>,
    pub level: f64,
    pub hc: HcVariant,
    pub km: EffectSummary,
    pub pv_adjusted: EffectSummary,
    /// `1 - (se_pv / se_km)²`.
    pub variance_reduction_observed: f64,
    /// `r_w²` from the arm-wise correlations of pseudovalues with the
    /// covariate (or with the fitted covariate score when there are several).
    pub variance_reduction_predicted: f64,
    pub correlations: Option<CorrelationProfile>,
}

pub fn analyze(data: &Dataset, tau: f64, level: f64, hc: HcVariant) -> Result<AnalysisReport> {
    let samples = &data.samples;
    let km = km_rmst_difference(samples, tau)?;
    let km_wald = wald(km.estimate, km.std_err, level)?;

    let pv = pseudovalues_fast(samples, tau)?;
    let k = data.covariate_names.len();
    let design = DesignMatrix::from_samples(samples, &(0..k).collect::<Vec<_>>())?;
    let fit = fit_pseudovalue_ols(&design, &pv, hc)?;
    let adjusted = wald_treatment_effect(&fit, level)?;

    let arms: Vec<Arm> = samples.iter().map(|s| s.arm).collect();
    let correlations = match k {
        0 => None,
        1 => {
            let c: Vec<f64> = samples.iter().map(|s| s.covariates[0]).collect();
            Some(empirical_correlation_profile(&pv, &c, &arms)?)
        }
        _ => {
            let cov_cols: Vec<usize> = (0..fit.p).filter(|&j| fit.roles[j] == ColumnRole::Covariate).collect();
            let score: Vec<f64> = (0..samples.len())
                .map(|i| cov_cols.iter().map(|&j| fit.beta[j] * design.get(i, j)).sum())
                .collect();
            Some(empirical_correlation_profile(&pv, &score, &arms)?)
        }
    };
    let variance_reduction_predicted = correlations.as_ref().map_or(0.0, predict_variance_reduction);
    let ratio = adjusted.std_err / km.std_err;

    let n_events = samples.iter().filter(|s| s.event && s.time <= tau).count();
    let n_censored = samples.iter().filter(|s| !s.event && s.time < tau).count();
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        tau,
        n: samples.len(),
        n_events,
        n_censored,
        n_at_risk_at_tau: samples.len() - n_events - n_censored,
        covariates: data.covariate_names.clone(),
        level,
        hc,
        km: km_wald.into(),
        pv_adjusted: adjusted.into(),
        variance_reduction_observed: 1.0 - ratio * ratio,
        variance_reduction_predicted,
        correlations,
    })
}

pub fn render_text(r: &AnalysisReport) -> String {
    let pct = 100.0 * r.level;
    let line = |label: &str, e: &EffectSummary| {
        format!(
            "  {label:<22}{:>10.4} ({:.4})   {pct:.0}% CI [{:.4}, {:.4}]   p = {:.4}\n",
            e.estimate, e.std_err, e.ci[0], e.ci[1], e.p_value
        )
    };
    let mut out = format!(
        "RMST difference (treatment - control) at tau = {}\n  n = {}: {} events, {} censored before tau, {} at risk at tau\n",
        r.tau, r.n, r.n_events, r.n_censored, r.n_at_risk_at_tau
    );
    out += &line("KM", &r.km);
    let label = if r.covariates.is_empty() {
        "Pseudovalue".to_string()
    } else {
        format!("Adjusted ({})", r.covariates.join(", "))
    };
    out += &line(&label, &r.pv_adjusted);
    out += &format!(
        "  Variance reduction    {:.1}% observed, {:.1}% predicted\n",
        100.0 * r.variance_reduction_observed,
        100.0 * r.variance_reduction_predicted
    );
    if let Some(c) = &r.correlations {
        out += &format!("  Correlations          control {:.3}, treatment {:.3}, pi {:.3}\n", c.r0, c.r1, c.pi);
    }
    out
}
