use serde::{Deserialize, Serialize};

use crate::error::{Result, RmstError};

/// Mean of the latent event time as a function of the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// `a + effect·1_T + 3u`
    Linear,
    /// `a + effect·1_T + u² + 3u`
    Quadratic,
}

impl Link {
    pub fn mean(self, a: f64, shift: f64, u: f64) -> f64 {
        match self {
            Link::Linear => a + shift + 3.0 * u,
            Link::Quadratic => a + shift + u * u + 3.0 * u,
        }
    }
}

impl std::str::FromStr for Link {
    type Err = RmstError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Link::Linear),
            "quadratic" => Ok(Link::Quadratic),
            other => Err(RmstError::invalid(format!("unknown link {other:?}"))),
        }
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Link::Linear => "linear",
            Link::Quadratic => "quadratic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    /// Treatment fraction; `round(n·pi)` subjects are treated.
    pub pi: f64,
    pub a: f64,
    pub link: Link,
    pub treatment_effect: f64,
    /// Rate of the exponential censoring time; 0 disables censoring.
    pub censor_rate: f64,
    /// Quantile of the control-arm latent event time used as `tau`.
    pub tau_quantile: f64,
    /// Link whose control-arm distribution defines `tau`; defaults to `link`.
    pub tau_link: Option<Link>,
    /// `σ²δ` of the noise added to the observed covariate.
    pub covariate_noise_var: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Confidence level of the reported intervals.
    pub level: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".to_string(),
            n: 500,
            pi: 0.5,
            a: 0.0,
            link: Link::Linear,
            treatment_effect: 0.5,
            censor_rate: 0.0,
            tau_quantile: 0.5,
            tau_link: None,
            covariate_noise_var: 0.0,
            replicates: 1000,
            seed: 1,
            level: 0.95,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(RmstError::invalid(format!("scenario {:?}: {msg}", self.name)));
        if self.n < 4 {
            return fail(format!("n must be at least 4, got {}", self.n));
        }
        if self.replicates < 1 {
            return fail("replicates must be at least 1".into());
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return fail(format!("pi must be in (0, 1), got {}", self.pi));
        }
        let n_trt = self.n_treated();
        if n_trt == 0 || n_trt == self.n {
            return fail("both arms need at least one subject".into());
        }
        if !(self.a >= 0.0) || !(self.a + self.treatment_effect >= 0.0) || !self.treatment_effect.is_finite() {
            return fail("a and a + treatment_effect must be non-negative".into());
        }
        if !(self.censor_rate >= 0.0) || !self.censor_rate.is_finite() {
            return fail("censor_rate must be non-negative".into());
        }
        if !(self.tau_quantile > 0.0 && self.tau_quantile < 1.0) {
            return fail(format!("tau_quantile must be in (0, 1), got {}", self.tau_quantile));
        }
        if !(self.covariate_noise_var >= 0.0) || !self.covariate_noise_var.is_finite() {
            return fail("covariate_noise_var must be non-negative".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return fail(format!("level must be in (0, 1), got {}", self.level));
        }
        Ok(())
    }

    pub fn n_treated(&self) -> usize {
        (self.n as f64 * self.pi).round() as usize
    }

    pub fn tau_link(&self) -> Link {
        self.tau_link.unwrap_or(self.link)
    }
}
