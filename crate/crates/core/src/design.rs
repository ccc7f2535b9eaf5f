//! Closed-form trial-design quantities.
//!
//! - Variance reduction predicted from arm-wise correlations between the
//!   pseudovalues and the adjustment covariate.
//! - The variance `σ²ε / (n π (1 - π))` of the adjusted treatment effect.
//! - Bias and variance limits of the treatment effect when the covariate is
//!   observed with additive noise, `c = u + δ`.
//! - A sample-size planner for the two-sided Wald test.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmstError};
use crate::normal;
use crate::pseudo::PseudovalueSet;
use crate::sample::Arm;
use crate::stats::{pearson, KahanSum};

fn check_pi(pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(RmstError::invalid(format!("treatment fraction must be in (0, 1), got {pi}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// Control-arm correlation between pseudovalues and covariate.
    pub r0: f64,
    /// Treatment-arm correlation.
    pub r1: f64,
    /// Fraction of subjects in the treatment arm.
    pub pi: f64,
}

impl CorrelationProfile {
    pub fn new(r0: f64, r1: f64, pi: f64) -> Result<Self> {
        for (name, r) in [("r0", r0), ("r1", r1)] {
            if !(-1.0..=1.0).contains(&r) {
                return Err(RmstError::invalid(format!("{name} must be in [-1, 1], got {r}")));
            }
        }
        check_pi(pi)?;
        Ok(CorrelationProfile { r0, r1, pi })
    }
}

/// How the arm correlations are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightPairing {
    /// `(1 - π) r1 + π r0`, the published form.
    #[default]
    AsPrinted,
    /// `π r1 + (1 - π) r0`, offered for sensitivity checks.
    Swapped,
}

pub fn weighted_correlation(profile: &CorrelationProfile, pairing: WeightPairing) -> f64 {
    let CorrelationProfile { r0, r1, pi } = *profile;
    match pairing {
        WeightPairing::AsPrinted => (1.0 - pi) * r1 + pi * r0,
        WeightPairing::Swapped => pi * r1 + (1.0 - pi) * r0,
    }
}

/// Predicted fractional variance reduction `r_w²` of the adjusted estimator
/// relative to the KM-based one.
pub fn predict_variance_reduction(profile: &CorrelationProfile) -> f64 {
    predict_variance_reduction_with(profile, WeightPairing::AsPrinted)
}

pub fn predict_variance_reduction_with(profile: &CorrelationProfile, pairing: WeightPairing) -> f64 {
    let rw = weighted_correlation(profile, pairing);
    (rw * rw).min(1.0)
}

/// Residual variance `(1 - r_w²) Var(θ̂ᵢ)` left after adjustment.
pub fn residual_variance(profile: &CorrelationProfile, pseudo_var: f64) -> f64 {
    (1.0 - predict_variance_reduction(profile)) * pseudo_var
}

/// `σ²ε / (n π (1 - π))`.
pub fn adjusted_treatment_variance(sigma_eps2: f64, n: usize, pi: f64) -> Result<f64> {
    if n < 2 {
        return Err(RmstError::invalid("n must be at least 2"));
    }
    check_pi(pi)?;
    if !(sigma_eps2 >= 0.0) {
        return Err(RmstError::invalid("residual variance must be non-negative"));
    }
    Ok(sigma_eps2 / (n as f64 * pi * (1.0 - pi)))
}

/// Regression with a covariate observed as `c = u + δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyCovariateSpec {
    /// `Var[u]` of the latent covariate.
    pub var_u: f64,
    /// `σ²δ`, variance of the measurement noise.
    pub var_delta: f64,
    /// Coefficient on the latent covariate, in the covariate's own units.
    pub beta2_true: f64,
    pub sigma_eps2: f64,
    pub n: usize,
    pub pi: f64,
}

impl NoisyCovariateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.var_u > 0.0) {
            return Err(RmstError::invalid("Var[u] must be positive"));
        }
        if !(self.var_delta >= 0.0) {
            return Err(RmstError::invalid("noise variance must be non-negative"));
        }
        if !(self.sigma_eps2 >= 0.0) {
            return Err(RmstError::invalid("residual variance must be non-negative"));
        }
        if !self.beta2_true.is_finite() {
            return Err(RmstError::invalid("covariate coefficient must be finite"));
        }
        if self.n < 2 {
            return Err(RmstError::invalid("n must be at least 2"));
        }
        check_pi(self.pi)
    }

    /// `Var[u] / σ²δ`.
    pub fn signal_to_noise(&self) -> f64 {
        self.var_u / self.var_delta
    }

    /// Coefficient after rescaling the covariate to unit variance.
    pub fn beta2_rescaled(&self) -> f64 {
        self.beta2_true * self.var_u.sqrt()
    }

    /// Standard deviation of `ū_C - ū_T` under randomization.
    pub fn mean_gap_sd(&self) -> f64 {
        let npq = self.n as f64 * self.pi * (1.0 - self.pi);
        (self.var_u / npq).sqrt()
    }

    fn with_n(&self, n: usize) -> Self {
        NoisyCovariateSpec { n, ..*self }
    }
}

/// Large-sample bias `b₁` of the treatment coefficient given the realised
/// covariate mean gap `ū_C - ū_T`:
///
/// `β₂ / (Var[u] / (σ²δ g) + 1 / g - π (1 - π) g / σ²δ)`.
///
/// The fitted coefficient behaves as `β₁ - b₁`. A zero gap gives exactly 0.
pub fn bias_limit_random_covariate(spec: &NoisyCovariateSpec, mean_gap: f64) -> Result<f64> {
    spec.validate()?;
    if spec.var_delta == 0.0 {
        return Err(RmstError::invalid(
            "noise variance is zero; the covariate is exact and the bias is zero",
        ));
    }
    if !mean_gap.is_finite() {
        return Err(RmstError::invalid("mean gap must be finite"));
    }
    if mean_gap == 0.0 || spec.beta2_true == 0.0 {
        return Ok(0.0);
    }
    let g = mean_gap;
    let s2 = spec.var_delta;
    let pq = spec.pi * (1.0 - spec.pi);
    // multiplied through by g so the expression stays finite for small g
    Ok(spec.beta2_true * s2 * g / (spec.var_u + s2 - pq * g * g))
}

/// The same limit on the standardized scale: `g = Z · sqrt(Var[u] / (nπ(1-π)))`,
///
/// `β̃₂ / (sqrt(nπ(1-π)) (1 + Var[u]/σ²δ) / Z - sqrt(π(1-π)/n) (Var[u]/σ²δ) Z)`.
pub fn bias_limit_standardized(spec: &NoisyCovariateSpec, z: f64) -> Result<f64> {
    spec.validate()?;
    if spec.var_delta == 0.0 {
        return Err(RmstError::invalid("noise variance is zero"));
    }
    if z == 0.0 || spec.beta2_true == 0.0 {
        return Ok(0.0);
    }
    let n = spec.n as f64;
    let pq = spec.pi * (1.0 - spec.pi);
    let snr = spec.signal_to_noise();
    let denom = (n * pq).sqrt() * (1.0 + snr) / z - (pq / n).sqrt() * snr * z;
    Ok(spec.beta2_rescaled() / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMoments {
    pub mean: f64,
    pub mean_abs: f64,
    /// Standard error of `mean`.
    pub std_err: f64,
    pub draws: usize,
}

/// Expectation of the bias limit over the randomization distribution of the
/// mean gap, by Monte Carlo with a fixed seed.
pub fn bias_limit_expectation(spec: &NoisyCovariateSpec, draws: usize, seed: u64) -> Result<MonteCarloMoments> {
    spec.validate()?;
    if draws < 2 {
        return Err(RmstError::invalid("need at least two draws"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = spec.mean_gap_sd();
    let mut s = KahanSum::new();
    let mut sa = KahanSum::new();
    let mut ss = KahanSum::new();
    for _ in 0..draws {
        let z: f64 = StandardNormal.sample(&mut rng);
        let b = bias_limit_random_covariate(spec, z * sd)?;
        s.add(b);
        sa.add(b.abs());
        ss.add(b * b);
    }
    let m = draws as f64;
    let mean = s.value() / m;
    let var = ((ss.value() - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(MonteCarloMoments {
        mean,
        mean_abs: sa.value() / m,
        std_err: (var / m).sqrt(),
        draws,
    })
}

/// Typical bias magnitude `E|b₁|` at each sample size, holding the rest of
/// the spec fixed.
pub fn bias_decay(spec: &NoisyCovariateSpec, sizes: &[usize], draws: usize, seed: u64) -> Result<Vec<f64>> {
    sizes
        .iter()
        .map(|&n| bias_limit_expectation(&spec.with_n(n), draws, seed).map(|m| m.mean_abs))
        .collect()
}

/// `(σ²ε + β̃₂² σ²δ / Var[u]) / (n π (1 - π))`, with `β̃₂ = β₂ sqrt(Var[u])`.
pub fn variance_limit_random_covariate(spec: &NoisyCovariateSpec) -> Result<f64> {
    spec.validate()?;
    let b = spec.beta2_rescaled();
    let inflation = b * b * spec.var_delta / spec.var_u;
    adjusted_treatment_variance(spec.sigma_eps2 + inflation, spec.n, spec.pi)
}

/// Finite-`n` form before the limit, for a given standardized mean gap `z`:
///
/// `(σ²ε + β₂² σ²δ)(Var[u] + σ²δ) / (nπ(1-π)(Var[u] + σ²δ - Var[u] z² / n))`.
pub fn variance_finite_random_covariate(spec: &NoisyCovariateSpec, z: f64) -> Result<f64> {
    spec.validate()?;
    let n = spec.n as f64;
    let pq = spec.pi * (1.0 - spec.pi);
    let num = (spec.sigma_eps2 + spec.beta2_true.powi(2) * spec.var_delta) * (spec.var_u + spec.var_delta);
    let den = n * pq * (spec.var_u + spec.var_delta - spec.var_u * z * z / n);
    if den <= 0.0 {
        return Err(RmstError::invalid("mean gap too large for the finite-sample form"));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeInput {
    /// Target RMST difference; sign is irrelevant.
    pub delta: f64,
    /// Per-subject pseudovalue variance `Var(θ̂ᵢ)` without adjustment.
    pub base_var_unit: f64,
    /// Fractional variance reduction from adjustment, in `[0, 1)`.
    pub reduction: f64,
    pub pi: f64,
    pub alpha: f64,
    pub power: f64,
}

impl SampleSizeInput {
    fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta != 0.0) {
            return Err(RmstError::invalid("effect size must be finite and non-zero"));
        }
        if !(self.base_var_unit > 0.0 && self.base_var_unit.is_finite()) {
            return Err(RmstError::invalid("base variance must be positive"));
        }
        if !(0.0..1.0).contains(&self.reduction) {
            return Err(RmstError::invalid(format!(
                "variance reduction must be in [0, 1), got {}",
                self.reduction
            )));
        }
        check_pi(self.pi)?;
        for (name, v) in [("alpha", self.alpha), ("power", self.power)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(RmstError::invalid(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// `(z_{1-α/2} + z_power)²`.
    pub fn z_factor(&self) -> f64 {
        let z = normal::quantile(1.0 - self.alpha / 2.0) + normal::quantile(self.power);
        z * z
    }
}

/// Smallest `n` with
/// `(z_{1-α/2} + z_power)² (1 - R) V / (n π (1 - π)) ≤ δ²`.
pub fn required_sample_size(input: &SampleSizeInput) -> Result<u64> {
    input.validate()?;
    let numerator = input.z_factor() * (1.0 - input.reduction) * input.base_var_unit;
    let scale = input.pi * (1.0 - input.pi) * input.delta * input.delta;
    let fits = |n: u64| numerator <= n as f64 * scale;
    let raw = numerator / scale;
    if !raw.is_finite() || raw > 1e15 {
        return Err(RmstError::invalid("required sample size is unbounded"));
    }
    let mut n = (raw.ceil() as u64).max(1);
    while n > 1 && fits(n - 1) {
        n -= 1;
    }
    while !fits(n) {
        n += 1;
    }
    Ok(n)
}

/// Per-arm Pearson correlations between pseudovalues and one covariate.
pub fn empirical_correlation_profile(
    pv: &PseudovalueSet,
    covariate: &[f64],
    arms: &[Arm],
) -> Result<CorrelationProfile> {
    let n = pv.values.len();
    if covariate.len() != n || arms.len() != n {
        return Err(RmstError::invalid("pseudovalues, covariate and arms differ in length"));
    }
    let mut r = [0.0; 2];
    for (slot, arm) in [Arm::Control, Arm::Treatment].into_iter().enumerate() {
        let idx: Vec<usize> = (0..n).filter(|&i| arms[i] == arm).collect();
        if idx.len() < 3 {
            return Err(RmstError::invalid(format!(
                "{} arm has {} subjects; need at least 3",
                arm.name(),
                idx.len()
            )));
        }
        let x: Vec<f64> = idx.iter().map(|&i| covariate[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| pv.values[i]).collect();
        if x.iter().all(|&v| v == x[0]) {
            return Err(RmstError::DegenerateCovariate {
                arm: arm.name().to_string(),
            });
        }
        // constant pseudovalues carry no linear signal
        r[slot] = pearson(&x, &y).unwrap_or(0.0);
    }
    let n_trt = arms.iter().filter(|&&a| a == Arm::Treatment).count();
    CorrelationProfile::new(r[0], r[1], n_trt as f64 / n as f64)
}
