use thiserror::Error;

pub type Result<T> = std::result::Result<T, RmstError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmstError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `index` names the left-out subject when the failure happened inside a
    /// jackknife subsample.
    #[error("restriction time {tau} is beyond the last observed time {max_time}{}", match .index {
        Some(i) => format!(" when subject {i} is left out"),
        None => String::new(),
    })]
    RestrictionTimeBeyondData {
        tau: f64,
        max_time: f64,
        index: Option<usize>,
    },

    #[error("design matrix is singular or ill-conditioned (reciprocal condition number {rcond:e})")]
    SingularDesign { rcond: f64 },

    #[error("covariate has zero variance within the {arm} arm")]
    DegenerateCovariate { arm: String },

    #[error("{failed} of {replicates} replicates failed (limit {limit}): {first_error}")]
    TooManyFailedReplicates {
        failed: usize,
        replicates: usize,
        limit: usize,
        first_error: String,
    },
}

impl RmstError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        RmstError::InvalidInput(msg.into())
    }

    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        !matches!(self, RmstError::InvalidInput(_))
    }
}
