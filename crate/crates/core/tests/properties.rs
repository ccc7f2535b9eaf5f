use proptest::prelude::*;

use rmst_core::pseudo::{pseudovalues_fast, pseudovalues_fast_times, pseudovalues_naive_times};
use rmst_core::regress::{fit_ols, DesignMatrix, HcVariant};
use rmst_core::survival::{km_fit_times, km_rmst_difference, rmst};
use rmst_core::{Arm, SurvivalSample};

/// Product-limit estimate and its RMST written out directly, for comparison.
fn brute_rmst(times: &[f64], events: &[bool], tau: f64) -> f64 {
    let mut grid: Vec<f64> = times.iter().copied().filter(|&t| t <= tau).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut s = 1.0;
    let mut last = 0.0;
    let mut area = 0.0;
    for &t in &grid {
        area += s * (t - last);
        last = t;
        let at_risk = times.iter().filter(|&&x| x >= t).count() as f64;
        let deaths = times.iter().zip(events).filter(|(&x, &e)| x == t && e).count() as f64;
        s *= 1.0 - deaths / at_risk;
    }
    area + s * (tau - last)
}

fn dataset() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec((1u32..40).prop_map(|k| k as f64 * 0.25), n),
            prop::collection::vec(prop::bool::weighted(0.7), n),
        )
    })
}

/// A restriction time every leave-one-out subsample can reach.
fn safe_tau(times: &[f64], frac: f64) -> f64 {
    let mut s = times.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() - 2] * frac
}

proptest! {
    #[test]
    fn survival_is_monotone_and_bounded((times, events) in dataset()) {
        let c = km_fit_times(&times, &events).unwrap();
        let mut prev = 1.0;
        for &s in &c.survival {
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn rmst_matches_direct_product_limit((times, events) in dataset(), frac in 0.05f64..1.0) {
        let tau = safe_tau(&times, frac);
        let r = rmst(&km_fit_times(&times, &events).unwrap(), tau).unwrap();
        prop_assert!((r.value - brute_rmst(&times, &events, tau)).abs() < 1e-12);
        prop_assert!(r.value >= 0.0 && r.value <= tau + 1e-12);
    }

    #[test]
    fn rmst_grows_with_tau((times, events) in dataset(), a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let c = km_fit_times(&times, &events).unwrap();
        let (lo, hi) = (safe_tau(&times, a.min(b)), safe_tau(&times, a.max(b)));
        prop_assert!(rmst(&c, lo).unwrap().value <= rmst(&c, hi).unwrap().value + 1e-12);
    }

    #[test]
    fn fast_pseudovalues_match_refits((times, events) in dataset(), frac in 0.05f64..1.0) {
        let tau = safe_tau(&times, frac);
        let fast = pseudovalues_fast_times(&times, &events, tau).unwrap();
        let naive = pseudovalues_naive_times(&times, &events, tau).unwrap();
        for (f, s) in fast.values.iter().zip(&naive.values) {
            prop_assert!((f - s).abs() < 1e-10);
        }
        // leave-one-out values against the direct formula
        for i in [0, times.len() / 2, times.len() - 1] {
            let mut t = times.clone();
            let mut e = events.clone();
            t.remove(i);
            e.remove(i);
            prop_assert!((fast.leave_one_out[i] - brute_rmst(&t, &e, tau)).abs() < 1e-10);
        }
    }

    #[test]
    fn pseudovalues_follow_permutations((times, events) in dataset(), shift in 1usize..50) {
        let tau = safe_tau(&times, 0.7);
        let n = times.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let pt: Vec<f64> = perm.iter().map(|&i| times[i]).collect();
        let pe: Vec<bool> = perm.iter().map(|&i| events[i]).collect();
        let a = pseudovalues_fast_times(&times, &events, tau).unwrap();
        let b = pseudovalues_fast_times(&pt, &pe, tau).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((b.values[k] - a.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn treatment_effect_ignores_covariate_units(
        y in prop::collection::vec(-5.0f64..5.0, 12..40),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let n = y.len();
        let t: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 * 0.3 + (i % 3) as f64).collect();
        let c2: Vec<f64> = c.iter().map(|x| x * scale + shift).collect();
        let base = fit_ols(&DesignMatrix::treatment_with_covariates(&t, &[c]).unwrap(), &y, HcVariant::HC1).unwrap();
        let moved = fit_ols(&DesignMatrix::treatment_with_covariates(&t, &[c2]).unwrap(), &y, HcVariant::HC1).unwrap();
        prop_assert!((base.beta[1] - moved.beta[1]).abs() < 1e-9);
        prop_assert!((base.std_errs()[1] - moved.std_errs()[1]).abs() < 1e-9);
        prop_assert!((base.beta[2] - moved.beta[2] * scale).abs() < 1e-8 * (1.0 + base.beta[2].abs()));
    }

    #[test]
    fn hc1_is_scaled_hc0(y in prop::collection::vec(-5.0f64..5.0, 10..30)) {
        let n = y.len();
        let t: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let d = DesignMatrix::treatment_with_covariates(&t, &[c]).unwrap();
        let h0 = fit_ols(&d, &y, HcVariant::HC0).unwrap();
        let h1 = fit_ols(&d, &y, HcVariant::HC1).unwrap();
        let k = n as f64 / (n - 3) as f64;
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((h1.sandwich_cov[i][j] - k * h0.sandwich_cov[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn unadjusted_fit_equals_km_difference_without_censoring() {
    let times = [0.3, 1.2, 0.8, 2.5, 1.9, 0.4, 3.1, 2.2, 1.1, 0.7];
    let samples: Vec<SurvivalSample> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| SurvivalSample::new(t, true, if i % 2 == 0 { Arm::Treatment } else { Arm::Control }, vec![]))
        .collect();
    let tau = 2.0;
    let pv = pseudovalues_fast(&samples, tau).unwrap();
    let d = DesignMatrix::from_samples(&samples, &[]).unwrap();
    let fit = fit_ols(&d, &pv.values, HcVariant::HC1).unwrap();
    let km = km_rmst_difference(&samples, tau).unwrap();
    assert!((fit.beta[1] - km.estimate).abs() < 1e-12);
}
