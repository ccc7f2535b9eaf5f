//! Kaplan-Meier estimation, RMST integration and the unadjusted KM-based
//! RMST difference between arms.
//!
//! Ties at a common time are ordered events first, so subjects censored at
//! an event time still count in that time's risk set.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmstError};
use crate::sample::{validate_samples, Arm, SurvivalSample};

/// Right-continuous product-limit survival curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    /// Distinct event times, strictly increasing.
    pub jump_times: Vec<f64>,
    /// `S(t)` just after each jump.
    pub survival: Vec<f64>,
    pub n_at_risk: Vec<usize>,
    pub n_events: Vec<usize>,
    pub n_total: usize,
    /// Largest observed time (event or censoring) in the fitted data.
    pub last_time: f64,
}

impl KmCurve {
    /// True when the curve hits zero, which can only happen at the last
    /// observed time.
    pub fn reaches_zero(&self) -> bool {
        self.survival.last() == Some(&0.0)
    }

    /// `S(t)`; equals 1 before the first jump.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&x| x <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmstEstimate {
    pub value: f64,
    pub std_err: f64,
    pub tau: f64,
    pub n: usize,
}

/// KM-based RMST difference (treatment minus control).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmstDifference {
    pub estimate: f64,
    /// `sqrt(Var(treatment) + Var(control))`.
    pub std_err: f64,
    /// Standard error from the pooled per-subject variance divided by
    /// `n π (1 - π)`.
    pub pooled_std_err: f64,
    /// Arm-size weighted per-subject variance `(n_T² V_T + n_C² V_C) / n`.
    pub pooled_unit_variance: f64,
    pub control: RmstEstimate,
    pub treatment: RmstEstimate,
}

pub fn km_fit(samples: &[SurvivalSample]) -> Result<KmCurve> {
    validate_samples(samples)?;
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let events: Vec<bool> = samples.iter().map(|s| s.event).collect();
    km_fit_times(&times, &events)
}

/// [`km_fit`] on parallel slices of times and event flags.
pub fn km_fit_times(times: &[f64], events: &[bool]) -> Result<KmCurve> {
    if times.is_empty() {
        return Err(RmstError::invalid("no samples"));
    }
    if times.len() != events.len() {
        return Err(RmstError::invalid("times and events differ in length"));
    }
    if let Some(i) = times.iter().position(|t| !t.is_finite() || *t < 0.0) {
        return Err(RmstError::invalid(format!(
            "sample {i}: time must be finite and non-negative, got {}",
            times[i]
        )));
    }
    let mut order: Vec<(f64, bool)> = times.iter().copied().zip(events.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    Ok(km_from_sorted(&order))
}

/// Builds the curve from `(time, event)` pairs already sorted by time with
/// events first among ties.
pub(crate) fn km_from_sorted(sorted: &[(f64, bool)]) -> KmCurve {
    let n = sorted.len();
    let mut curve = KmCurve {
        jump_times: Vec::new(),
        survival: Vec::new(),
        n_at_risk: Vec::new(),
        n_events: Vec::new(),
        n_total: n,
        last_time: sorted.last().map_or(0.0, |s| s.0),
    };
    let mut at_risk = n;
    let mut surv = 1.0;
    let mut i = 0;
    while i < n {
        let t = sorted[i].0;
        let mut d = 0;
        let mut j = i;
        while j < n && sorted[j].0 == t {
            if sorted[j].1 {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            surv *= 1.0 - d as f64 / at_risk as f64;
            curve.jump_times.push(t);
            curve.survival.push(surv);
            curve.n_at_risk.push(at_risk);
            curve.n_events.push(d);
        }
        at_risk -= j - i;
        i = j;
    }
    curve
}

/// A restriction time is usable when it does not pass the last observed time,
/// or when the curve has already dropped to zero there (every subject in the
/// final time group had the event), in which case `S` is known beyond it.
pub(crate) fn check_tau(tau: f64, last_time: f64, reaches_zero: bool) -> Result<()> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(RmstError::invalid(format!(
            "restriction time must be positive and finite, got {tau}"
        )));
    }
    if tau > last_time && !reaches_zero {
        return Err(RmstError::RestrictionTimeBeyondData {
            tau,
            max_time: last_time,
            index: None,
        });
    }
    Ok(())
}

/// Area under the KM curve on `[0, tau]` with the integrated Greenwood
/// standard error.
pub fn rmst(curve: &KmCurve, tau: f64) -> Result<RmstEstimate> {
    check_tau(tau, curve.last_time, curve.reaches_zero())?;
    let k_max = curve.jump_times.partition_point(|&t| t <= tau);

    // segment areas: [0, t_0), then [t_k, t_{k+1}) clipped at tau
    let first_end = curve.jump_times.first().map_or(tau, |&t| t.min(tau));
    let mut value = first_end;
    let mut seg = vec![0.0; k_max];
    for k in 0..k_max {
        let end = if k + 1 < k_max {
            curve.jump_times[k + 1]
        } else {
            tau
        };
        seg[k] = curve.survival[k] * (end - curve.jump_times[k]);
        value += seg[k];
    }

    let mut var = 0.0;
    let mut tail = 0.0;
    for k in (0..k_max).rev() {
        tail += seg[k];
        let r = curve.n_at_risk[k] as f64;
        let d = curve.n_events[k] as f64;
        if r > d {
            var += tail * tail * d / (r * (r - d));
        }
    }
    Ok(RmstEstimate {
        value,
        std_err: var.sqrt(),
        tau,
        n: curve.n_total,
    })
}

pub fn km_rmst_difference(samples: &[SurvivalSample], tau: f64) -> Result<RmstDifference> {
    validate_samples(samples)?;
    let (trt, ctl): (Vec<_>, Vec<_>) = samples.iter().partition(|s| s.arm == Arm::Treatment);
    let fit_arm = |arm: &[&SurvivalSample], name: &str| -> Result<RmstEstimate> {
        if arm.is_empty() {
            return Err(RmstError::invalid(format!("{name} arm is empty")));
        }
        let times: Vec<f64> = arm.iter().map(|s| s.time).collect();
        let events: Vec<bool> = arm.iter().map(|s| s.event).collect();
        rmst(&km_fit_times(&times, &events)?, tau)
    };
    let treatment = fit_arm(&trt, "treatment")?;
    let control = fit_arm(&ctl, "control")?;
    Ok(combine_arms(treatment, control))
}

pub(crate) fn combine_arms(treatment: RmstEstimate, control: RmstEstimate) -> RmstDifference {
    let vt = treatment.std_err * treatment.std_err;
    let vc = control.std_err * control.std_err;
    let nt = treatment.n as f64;
    let nc = control.n as f64;
    let n = nt + nc;
    let pi = nt / n;
    let pooled_unit_variance = (nt * nt * vt + nc * nc * vc) / n;
    RmstDifference {
        estimate: treatment.value - control.value,
        std_err: (vt + vc).sqrt(),
        pooled_std_err: (pooled_unit_variance / (n * pi * (1.0 - pi))).sqrt(),
        pooled_unit_variance,
        control,
        treatment,
    }
}
