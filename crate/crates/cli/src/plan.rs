use serde::{Deserialize, Serialize};

use rmst_core::design::{
    predict_variance_reduction_with, required_sample_size, weighted_correlation, CorrelationProfile,
    SampleSizeInput, WeightPairing,
};
use rmst_core::RmstError;

use crate::error::Result;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub delta: f64,
    pub r0: f64,
    pub r1: f64,
    pub pi: f64,
    pub alpha: f64,
    pub power: f64,
    /// Per-subject pseudovalue variance without adjustment.
    pub base_var: f64,
    pub pairing: WeightPairing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub schema_version: u32,
    pub request: PlanRequest,
    pub weighted_correlation: f64,
    pub predicted_reduction: f64,
    pub n_unadjusted: u64,
    pub n_adjusted: u64,
    pub formulas: Vec<String>,
}

pub fn plan(req: &PlanRequest) -> Result<PlanReport> {
    let profile = CorrelationProfile::new(req.r0, req.r1, req.pi)?;
    let rw = weighted_correlation(&profile, req.pairing);
    if rw.abs() >= 1.0 {
        return Err(RmstError::InvalidInput(format!(
            "weighted correlation {rw} leaves no residual variance; |r_w| must be below 1"
        ))
        .into());
    }
    let reduction = predict_variance_reduction_with(&profile, req.pairing);
    let input = |reduction| SampleSizeInput {
        delta: req.delta,
        base_var_unit: req.base_var,
        reduction,
        pi: req.pi,
        alpha: req.alpha,
        power: req.power,
    };
    let weights = match req.pairing {
        WeightPairing::AsPrinted => "r_w = (1 - pi) r1 + pi r0",
        WeightPairing::Swapped => "r_w = pi r1 + (1 - pi) r0",
    };
    Ok(PlanReport {
        schema_version: SCHEMA_VERSION,
        request: *req,
        weighted_correlation: rw,
        predicted_reduction: reduction,
        n_unadjusted: required_sample_size(&input(0.0))?,
        n_adjusted: required_sample_size(&input(reduction))?,
        formulas: vec![
            weights.to_string(),
            "Var(adjusted) = (1 - r_w^2) V / (n pi (1 - pi))".to_string(),
            "n = (z_{1-alpha/2} + z_power)^2 (1 - r_w^2) V / (pi (1 - pi) delta^2), rounded up".to_string(),
        ],
    })
}

pub fn render_text(r: &PlanReport) -> String {
    let mut out = format!(
        "Sample size for RMST difference {} (alpha {}, power {})\n",
        r.request.delta, r.request.alpha, r.request.power
    );
    out += &format!("  weighted correlation  {:.4}\n", r.weighted_correlation);
    out += &format!("  predicted reduction   {:.1}%\n", 100.0 * r.predicted_reduction);
    out += &format!("  n without adjustment  {}\n", r.n_unadjusted);
    out += &format!("  n with adjustment     {}\n", r.n_adjusted);
    for f in &r.formulas {
        out += &format!("  {f}\n");
    }
    out
}
