//! Ground-truth quantities for a scenario, by fixed-seed Monte Carlo over
//! the covariate with the event-time expectation done in closed form:
//! given `u`, the latent time is exponential with mean `μ(u)`, so
//! `P(Y > t | u) = exp(-t/μ)` and `E[min(Y, τ) | u] = μ (1 - exp(-τ/μ))`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Link, ScenarioConfig};
use super::rng::{stream, StreamRole};
use crate::stats::KahanSum;

pub const TAU_ORACLE_DRAWS: usize = 1_000_000;
pub const TRUTH_ORACLE_DRAWS: usize = 10_000_000;
const TAU_ORACLE_SEED: u64 = 0x5eed_0001;
const TRUTH_ORACLE_SEED: u64 = 0x5eed_0002;
const CHUNK: usize = 100_000;

fn covariate_draws(seed: u64, draws: usize, role: StreamRole) -> Vec<f64> {
    let chunks = draws.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let len = CHUNK.min(draws - k * CHUNK);
            let mut rng = stream(seed, k as u64, role);
            (0..len).map(move |_| -> f64 { Exp1.sample(&mut rng) })
        })
        .collect()
}

fn tau_draws() -> &'static [f64] {
    static DRAWS: OnceLock<Vec<f64>> = OnceLock::new();
    DRAWS.get_or_init(|| covariate_draws(TAU_ORACLE_SEED, TAU_ORACLE_DRAWS, StreamRole::TauOracle))
}

fn survival_and_density(means: &[f64], t: f64) -> (f64, f64) {
    let mut s = KahanSum::new();
    let mut f = KahanSum::new();
    for &m in means {
        let e = (-t / m).exp();
        s.add(e);
        f.add(e / m);
    }
    let k = means.len() as f64;
    (s.value() / k, f.value() / k)
}

/// The `q`-quantile of a scale mixture of exponentials with the given means
/// (equal weights), solved by safeguarded Newton iteration.
pub fn quantile_from_means(means: &[f64], q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "quantile level must be in (0, 1)");
    assert!(!means.is_empty());
    let target = 1.0 - q;
    let g = |t: f64| {
        let (s, f) = survival_and_density(means, t);
        (s - target, f)
    };
    let mut sorted = means.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted[sorted.len() / 2].max(f64::MIN_POSITIVE);
    let mut lo = 0.0;
    let mut hi = mid;
    while g(hi).0 > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (val, dens) = g(t);
        if val == 0.0 {
            return t;
        }
        if val > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t + val / dens;
        t = if dens > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-14 * hi || (val.abs() < 1e-15) {
            break;
        }
    }
    t
}

type TauKey = (Link, u64, u64);

/// `tau` for a scenario: the `tau_quantile` quantile of the control-arm
/// latent event time under `tau_link` (default: the scenario's link).
/// Fixed seed, independent of the scenario seed; cached.
pub fn resolve_tau(config: &ScenarioConfig) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<TauKey, f64>>> = OnceLock::new();
    let link = config.tau_link();
    let key = (link, config.a.to_bits(), config.tau_quantile.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&t) = cache.lock().expect("tau cache poisoned").get(&key) {
        return t;
    }
    let means: Vec<f64> = tau_draws().iter().map(|&u| link.mean(config.a, 0.0, u)).collect();
    let tau = quantile_from_means(&means, config.tau_quantile);
    cache.lock().expect("tau cache poisoned").insert(key, tau);
    tau
}

/// Ratio of the marginal treatment and control hazards at time `t`.
pub fn hazard_ratio_at(config: &ScenarioConfig, t: f64) -> f64 {
    let hazard = |shift: f64| {
        let means: Vec<f64> = tau_draws()
            .iter()
            .map(|&u| config.link.mean(config.a, shift, u))
            .collect();
        let (s, f) = survival_and_density(&means, t);
        f / s
    };
    hazard(config.treatment_effect) / hazard(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEffect {
    /// `E[min(Y_T, τ)] - E[min(Y_C, τ)]`.
    pub value: f64,
    /// Monte Carlo standard error of `value`.
    pub std_err: f64,
    pub control_rmst: f64,
    pub treatment_rmst: f64,
    pub draws: usize,
}

/// True RMST difference at `tau` with the default seed and
/// [`TRUTH_ORACLE_DRAWS`] draws; cached.
pub fn true_rmst_difference(config: &ScenarioConfig, tau: f64) -> TrueEffect {
    type Key = (Link, u64, u64, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, TrueEffect>>> = OnceLock::new();
    let key = (
        config.link,
        config.a.to_bits(),
        config.treatment_effect.to_bits(),
        tau.to_bits(),
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&t) = cache.lock().expect("truth cache poisoned").get(&key) {
        return t;
    }
    let truth = true_rmst_difference_with(config, tau, TRUTH_ORACLE_SEED, TRUTH_ORACLE_DRAWS);
    cache.lock().expect("truth cache poisoned").insert(key, truth);
    truth
}

/// Same as [`true_rmst_difference`] with an explicit seed and draw count.
/// Both arms share each covariate draw.
pub fn true_rmst_difference_with(config: &ScenarioConfig, tau: f64, seed: u64, draws: usize) -> TrueEffect {
    assert!(draws >= 2, "need at least two draws");
    let restricted = |m: f64| -> f64 {
        if m <= 0.0 {
            0.0
        } else {
            -m * (-tau / m).exp_m1()
        }
    };
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<[KahanSum; 4]> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(draws - k * CHUNK);
            let mut rng = stream(seed, k as u64, StreamRole::TruthOracle);
            let mut acc = [KahanSum::new(); 4];
            for _ in 0..len {
                let u: f64 = Exp1.sample(&mut rng);
                let c = restricted(config.link.mean(config.a, 0.0, u));
                let t = restricted(config.link.mean(config.a, config.treatment_effect, u));
                let d = t - c;
                acc[0].add(d);
                acc[1].add(d * d);
                acc[2].add(c);
                acc[3].add(t);
            }
            acc
        })
        .collect();
    let total = |j: usize| partial.iter().map(|p| p[j].value()).collect::<KahanSum>().value();
    let m = draws as f64;
    let mean = total(0) / m;
    let var = ((total(1) - m * mean * mean) / (m - 1.0)).max(0.0);
    TrueEffect {
        value: mean,
        std_err: (var / m).sqrt(),
        control_rmst: total(2) / m,
        treatment_rmst: total(3) / m,
        draws,
    }
}
