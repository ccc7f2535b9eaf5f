use serde::{Deserialize, Serialize};

use crate::error::{Result, RmstError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    Control,
    Treatment,
}

impl Arm {
    pub fn indicator(self) -> f64 {
        match self {
            Arm::Control => 0.0,
            Arm::Treatment => 1.0,
        }
    }

    pub fn from_code(code: u8) -> Option<Arm> {
        match code {
            0 => Some(Arm::Control),
            1 => Some(Arm::Treatment),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Control => "control",
            Arm::Treatment => "treatment",
        }
    }
}

/// One subject: observed time `min(T, C)`, event flag, randomized arm and
/// baseline covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    pub time: f64,
    /// `true` when the event was observed, `false` when right-censored.
    pub event: bool,
    pub arm: Arm,
    pub covariates: Vec<f64>,
}

impl SurvivalSample {
    pub fn new(time: f64, event: bool, arm: Arm, covariates: Vec<f64>) -> Self {
        SurvivalSample {
            time,
            event,
            arm,
            covariates,
        }
    }
}

/// Checks the dataset-level invariants: non-empty, finite non-negative
/// times, and a common covariate length.
pub fn validate_samples(samples: &[SurvivalSample]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| RmstError::invalid("no samples"))?;
    let p = first.covariates.len();
    for (i, s) in samples.iter().enumerate() {
        if !s.time.is_finite() || s.time < 0.0 {
            return Err(RmstError::invalid(format!(
                "sample {i}: time must be finite and non-negative, got {}",
                s.time
            )));
        }
        if s.covariates.len() != p {
            return Err(RmstError::invalid(format!(
                "sample {i}: expected {p} covariates, got {}",
                s.covariates.len()
            )));
        }
    }
    Ok(())
}
