use rand_distr::{Distribution, Exp1, StandardNormal};

use super::config::ScenarioConfig;
use super::rng::{stream, StreamRole};
use crate::sample::{Arm, SurvivalSample};

/// One simulated trial. `samples[i].covariates == [observed[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub samples: Vec<SurvivalSample>,
    /// Latent covariate `u`.
    pub latent: Vec<f64>,
    /// Observed covariate `c = u + δ`.
    pub observed: Vec<f64>,
    /// Latent event times before censoring.
    pub event_times: Vec<f64>,
}

impl SimDataset {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.event).collect()
    }

    pub fn arms(&self) -> Vec<Arm> {
        self.samples.iter().map(|s| s.arm).collect()
    }

    pub fn treatment_indicator(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.arm.indicator()).collect()
    }
}

/// Draws replicate `replicate_index` of `config`. The first `round(n·pi)`
/// subjects are treated; since subjects are exchangeable this is equivalent
/// to a fixed-size randomization.
pub fn generate_dataset(config: &ScenarioConfig, replicate_index: u64) -> SimDataset {
    let n = config.n;
    let n_trt = config.n_treated();
    let mut cov_rng = stream(config.seed, replicate_index, StreamRole::Covariate);
    let mut time_rng = stream(config.seed, replicate_index, StreamRole::EventTime);
    let mut cens_rng = stream(config.seed, replicate_index, StreamRole::Censoring);
    let mut noise_rng = stream(config.seed, replicate_index, StreamRole::CovariateNoise);
    let noise_sd = config.covariate_noise_var.sqrt();

    let mut out = SimDataset {
        samples: Vec::with_capacity(n),
        latent: Vec::with_capacity(n),
        observed: Vec::with_capacity(n),
        event_times: Vec::with_capacity(n),
    };
    for i in 0..n {
        let arm = if i < n_trt { Arm::Treatment } else { Arm::Control };
        let u: f64 = Exp1.sample(&mut cov_rng);
        let mean = config
            .link
            .mean(config.a, config.treatment_effect * arm.indicator(), u);
        let e: f64 = Exp1.sample(&mut time_rng);
        let y = mean * e;
        let (time, event) = if config.censor_rate > 0.0 {
            let c_draw: f64 = Exp1.sample(&mut cens_rng);
            let c = c_draw / config.censor_rate;
            if y <= c {
                (y, true)
            } else {
                (c, false)
            }
        } else {
            (y, true)
        };
        let observed = if noise_sd > 0.0 {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            u + noise_sd * z
        } else {
            u
        };
        out.samples.push(SurvivalSample::new(time, event, arm, vec![observed]));
        out.latent.push(u);
        out.observed.push(observed);
        out.event_times.push(y);
    }
    out
}
