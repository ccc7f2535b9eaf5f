//! Jackknife pseudo-observations of the RMST.
//!
//! The pseudovalue of subject `i` is `n θ̂ - (n - 1) θ̂⁻ⁱ`, where `θ̂` is the
//! KM-based RMST of the pooled sample and `θ̂⁻ⁱ` the same estimate with
//! subject `i` left out.
//!
//! [`pseudovalues_naive`] refits the curve `n` times and is kept as the
//! reference. [`pseudovalues_fast`] sorts once and rebuilds each
//! leave-one-out integral from prefix and suffix sums in `O(log n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmstError};
use crate::sample::{validate_samples, SurvivalSample};
use crate::survival::{check_tau, km_fit_times, km_from_sorted, rmst};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudovalueSet {
    /// One pseudovalue per subject, in input order.
    pub values: Vec<f64>,
    /// `θ̂⁻ⁱ`, in input order.
    pub leave_one_out: Vec<f64>,
    pub tau: f64,
    /// Full-sample RMST.
    pub theta_hat: f64,
    pub n: usize,
}

impl PseudovalueSet {
    fn from_parts(theta_hat: f64, leave_one_out: Vec<f64>, tau: f64) -> Self {
        let n = leave_one_out.len();
        let nf = n as f64;
        let values = leave_one_out
            .iter()
            .map(|loo| nf * theta_hat - (nf - 1.0) * loo)
            .collect();
        PseudovalueSet {
            values,
            leave_one_out,
            tau,
            theta_hat,
            n,
        }
    }

    /// The jackknife estimate `n θ̂ - (n - 1) · mean(θ̂⁻ⁱ)`.
    pub fn jackknife_estimate(&self) -> f64 {
        let nf = self.n as f64;
        nf * self.theta_hat - (nf - 1.0) * crate::stats::mean(&self.leave_one_out)
    }
}

fn split(samples: &[SurvivalSample]) -> Result<(Vec<f64>, Vec<bool>)> {
    validate_samples(samples)?;
    Ok((
        samples.iter().map(|s| s.time).collect(),
        samples.iter().map(|s| s.event).collect(),
    ))
}

fn check_input(times: &[f64], events: &[bool]) -> Result<()> {
    if times.len() != events.len() {
        return Err(RmstError::invalid("times and events differ in length"));
    }
    if times.len() < 2 {
        return Err(RmstError::invalid("pseudovalues need at least two subjects"));
    }
    Ok(())
}

pub fn pseudovalues_naive(samples: &[SurvivalSample], tau: f64) -> Result<PseudovalueSet> {
    let (times, events) = split(samples)?;
    pseudovalues_naive_times(&times, &events, tau)
}

pub fn pseudovalues_fast(samples: &[SurvivalSample], tau: f64) -> Result<PseudovalueSet> {
    let (times, events) = split(samples)?;
    pseudovalues_fast_times(&times, &events, tau)
}

/// Reference implementation: one full Kaplan-Meier refit per left-out
/// subject. Refits run in parallel; each is deterministic.
pub fn pseudovalues_naive_times(times: &[f64], events: &[bool], tau: f64) -> Result<PseudovalueSet> {
    check_input(times, events)?;
    let theta_hat = rmst(&km_fit_times(times, events)?, tau)?.value;
    let n = times.len();
    let loo: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t: Vec<f64> = times
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            let e: Vec<bool> = events
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            let curve = km_fit_times(&t, &e)?;
            rmst(&curve, tau).map(|r| r.value).map_err(|err| match err {
                RmstError::RestrictionTimeBeyondData { tau, max_time, .. } => {
                    RmstError::RestrictionTimeBeyondData {
                        tau,
                        max_time,
                        index: Some(i),
                    }
                }
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PseudovalueSet::from_parts(theta_hat, loo, tau))
}

/// Incremental implementation.
///
/// Removing subject `i` (time `y`) lowers the risk set by one at every event
/// time `t_j ≤ y` and, if `i` is an event, lowers the event count at `y`.
/// The leave-one-out curve is therefore
///
/// - `Π_{t_j ≤ t} (1 - d_j / (r_j - 1))` for `t < y`, and
/// - that prefix, times the adjusted factor at `y`, times
///   `Π_{y < t_j ≤ t} (1 - d_j / r_j)` for `t ≥ y`.
///
/// Both pieces are integrated from precomputed prefix integrals of the
/// first product and suffix integrals of the second, so no division by a
/// possibly-zero survival value is needed.
pub fn pseudovalues_fast_times(times: &[f64], events: &[bool], tau: f64) -> Result<PseudovalueSet> {
    check_input(times, events)?;
    if let Some(i) = times.iter().position(|t| !t.is_finite() || *t < 0.0) {
        return Err(RmstError::invalid(format!(
            "sample {i}: time must be finite and non-negative, got {}",
            times[i]
        )));
    }
    let n = times.len();
    let mut sorted: Vec<(f64, bool)> = times.iter().copied().zip(events.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let curve = km_from_sorted(&sorted);
    let theta_hat = rmst(&curve, tau)?.value;

    let validity = LooValidity::new(&sorted, tau);
    let t = &curve.jump_times;
    let k_total = t.len();

    // prefix pieces: g_j = 1 - d_j / (r_j - 1), B_k = Π_{j≤k} g_j,
    // q_k = ∫_0^{t_k} Π_{t_j ≤ s} g_j ds
    let mut b = vec![0.0; k_total];
    let mut q = vec![0.0; k_total];
    let mut prod = 1.0;
    for k in 0..k_total {
        q[k] = if k == 0 {
            t[0]
        } else {
            q[k - 1] + b[k - 1] * (t[k] - t[k - 1])
        };
        let r = curve.n_at_risk[k];
        // r == 1 only at the final time; that factor is never used by a
        // subject whose time is later
        if r >= 2 {
            prod *= 1.0 - curve.n_events[k] as f64 / (r - 1) as f64;
        }
        b[k] = prod;
    }
    let head = |s: f64| -> f64 {
        let k = t.partition_point(|&x| x < s);
        if k == 0 {
            s
        } else {
            q[k - 1] + b[k - 1] * (s - t[k - 1])
        }
    };

    // suffix pieces: f_k = 1 - d_k / r_k and
    // h_k = ∫_{t_k}^{tau} Π_{t_k < t_j ≤ s} f_j ds for t_k < tau
    let f: Vec<f64> = (0..k_total)
        .map(|k| 1.0 - curve.n_events[k] as f64 / curve.n_at_risk[k] as f64)
        .collect();
    let k_below = t.partition_point(|&x| x < tau);
    let mut h = vec![0.0; k_below];
    for k in (0..k_below).rev() {
        h[k] = if k + 1 < k_below {
            (t[k + 1] - t[k]) + f[k + 1] * h[k + 1]
        } else {
            tau - t[k]
        };
    }
    // ∫_y^{tau} Π_{y < t_j ≤ s} f_j ds for y < tau
    let tail = |y: f64| -> f64 {
        let k = t.partition_point(|&x| x <= y);
        if k < k_below {
            (t[k] - y) + f[k] * h[k]
        } else {
            tau - y
        }
    };

    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let (y, is_event) = (times[i], events[i]);
            validity.check(y, is_event, i)?;
            let mut value = head(y.min(tau));
            if y < tau {
                let k_prev = t.partition_point(|&x| x < y);
                let prefix = if k_prev == 0 { 1.0 } else { b[k_prev - 1] };
                let at_y = match t.get(k_prev) {
                    Some(&tk) if tk == y => {
                        let r = curve.n_at_risk[k_prev] - 1;
                        let d = curve.n_events[k_prev] - usize::from(is_event);
                        if r == 0 {
                            1.0
                        } else {
                            1.0 - d as f64 / r as f64
                        }
                    }
                    _ => 1.0,
                };
                value += prefix * at_y * tail(y);
            }
            Ok(value)
        })
        .collect::<Result<_>>()?;
    Ok(PseudovalueSet::from_parts(theta_hat, loo, tau))
}

/// Decides, without refitting, whether `tau` is usable once a given subject
/// is removed. Mirrors [`check_tau`] on the subsample: only the last time
/// group (and the one before it, when the last group is a single subject)
/// can change.
struct LooValidity {
    tau: f64,
    last_time: f64,
    last_size: usize,
    last_censored: usize,
    prev_time: f64,
    prev_censored: usize,
}

impl LooValidity {
    fn new(sorted: &[(f64, bool)], tau: f64) -> Self {
        let n = sorted.len();
        let last_time = sorted[n - 1].0;
        let start = sorted.partition_point(|s| s.0 < last_time);
        let last_size = n - start;
        let last_censored = sorted[start..].iter().filter(|s| !s.1).count();
        let (prev_time, prev_censored) = if start > 0 {
            let pt = sorted[start - 1].0;
            let ps = sorted.partition_point(|s| s.0 < pt);
            (pt, sorted[ps..start].iter().filter(|s| !s.1).count())
        } else {
            (f64::NAN, 0)
        };
        LooValidity {
            tau,
            last_time,
            last_size,
            last_censored,
            prev_time,
            prev_censored,
        }
    }

    fn check(&self, y: f64, is_event: bool, index: usize) -> Result<()> {
        let (max_time, censored) = if y < self.last_time {
            (self.last_time, self.last_censored)
        } else if self.last_size >= 2 {
            (self.last_time, self.last_censored - usize::from(!is_event))
        } else {
            (self.prev_time, self.prev_censored)
        };
        check_tau(self.tau, max_time, censored == 0).map_err(|err| match err {
            RmstError::RestrictionTimeBeyondData { tau, max_time, .. } => {
                RmstError::RestrictionTimeBeyondData {
                    tau,
                    max_time,
                    index: Some(index),
                }
            }
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Arm;

    fn data(pairs: &[(f64, bool)]) -> Vec<SurvivalSample> {
        pairs
            .iter()
            .map(|&(t, e)| SurvivalSample::new(t, e, Arm::Control, vec![]))
            .collect()
    }

    #[test]
    fn three_subject_hand_jackknife() {
        let d = data(&[(1.0, true), (2.0, false), (3.0, true)]);
        // tau = 2: theta = 1 + 2/3; leave-one-out = 2, 1.5, 1.5
        for pv in [pseudovalues_naive(&d, 2.0).unwrap(), pseudovalues_fast(&d, 2.0).unwrap()] {
            assert!((pv.theta_hat - 5.0 / 3.0).abs() < 1e-15);
            let want_loo = [2.0, 1.5, 1.5];
            let want = [1.0, 2.0, 2.0];
            for i in 0..3 {
                assert!((pv.leave_one_out[i] - want_loo[i]).abs() < 1e-15);
                assert!((pv.values[i] - want[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn leave_one_out_tau_failure_names_subject() {
        // without subject 2 the data end with a censoring at 2 < tau = 3
        let d = data(&[(1.0, true), (2.0, false), (3.0, true)]);
        let want = RmstError::RestrictionTimeBeyondData {
            tau: 3.0,
            max_time: 2.0,
            index: Some(2),
        };
        assert_eq!(pseudovalues_naive(&d, 3.0).unwrap_err(), want);
        assert_eq!(pseudovalues_fast(&d, 3.0).unwrap_err(), want);
    }

    #[test]
    fn no_censoring_returns_truncated_times() {
        let times = [0.3, 1.7, 0.9, 4.2, 2.2, 2.2, 0.1];
        let d = data(&times.iter().map(|&t| (t, true)).collect::<Vec<_>>());
        let tau = 2.0;
        for pv in [pseudovalues_naive(&d, tau).unwrap(), pseudovalues_fast(&d, tau).unwrap()] {
            for (v, t) in pv.values.iter().zip(times) {
                assert!((v - t.min(tau)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jackknife_depends_on_n() {
        let base = [(1.0, true), (2.0, false), (2.5, true), (4.0, false), (5.0, true)];
        let d = data(&base);
        let mut dd = d.clone();
        dd.extend(d.clone());
        let a = pseudovalues_fast(&d, 3.0).unwrap();
        let b = pseudovalues_fast(&dd, 3.0).unwrap();
        // brute-force jackknife of the same data
        assert!((a.values[2] - 7.0 / 3.0).abs() < 1e-12);
        assert!((b.values[2] - 71.0 / 30.0).abs() < 1e-12);
        assert!((a.values[3] - 37.0 / 12.0).abs() < 1e-12);
        assert!((b.values[3] - 46.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_input() {
        let d = data(&[(1.0, true)]);
        assert!(matches!(pseudovalues_fast(&d, 1.0), Err(RmstError::InvalidInput(_))));
        assert!(matches!(pseudovalues_naive(&d, 1.0), Err(RmstError::InvalidInput(_))));
    }

    #[test]
    fn ties_everywhere_match_naive() {
        let d = data(&[
            (1.0, true),
            (1.0, false),
            (1.0, true),
            (2.0, false),
            (2.0, true),
            (3.0, true),
            (3.0, true),
            (3.0, false),
            (0.5, false),
        ]);
        for tau in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            let a = pseudovalues_naive(&d, tau).unwrap();
            let b = pseudovalues_fast(&d, tau).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-12, "tau {tau}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn final_group_of_events_allows_deep_tau() {
        let d = data(&[(1.0, true), (2.0, false), (3.0, true), (3.0, true)]);
        for tau in [3.0, 3.5, 10.0] {
            let a = pseudovalues_naive(&d, tau).unwrap();
            let b = pseudovalues_fast(&d, tau).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        // a single final event: removing it leaves the tie-free censored tail
        let d = data(&[(1.0, true), (2.0, false), (3.0, true)]);
        assert!(pseudovalues_fast(&d, 3.5).is_err());
        assert!(pseudovalues_naive(&d, 3.5).is_err());
    }
}
