use rmst_core::design::{required_sample_size, SampleSizeInput};
use rmst_core::pseudo::{pseudovalues_fast_times, pseudovalues_naive_times};
use rmst_core::simkit::{
    generate_dataset, resolve_tau, run_scenario, true_rmst_difference, true_rmst_difference_with, Link,
    ScenarioConfig,
};
use rmst_core::stats;

/// `∫₀^∞ e^{-u} f(u) du` by composite Simpson on [0, 60].
fn integrate_u(f: impl Fn(f64) -> f64) -> f64 {
    let m = 200_000;
    let h = 60.0 / m as f64;
    let mut s = f(0.0) + (-60.0f64).exp() * f(60.0);
    for k in 1..m {
        let u = k as f64 * h;
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * (-u).exp() * f(u);
    }
    s * h / 3.0
}

fn quadrature_tau(link: Link, a: f64, q: f64) -> f64 {
    let surv = |t: f64| integrate_u(|u| (-t / link.mean(a, 0.0, u)).exp());
    let (mut lo, mut hi) = (0.0, 50.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if surv(mid) > 1.0 - q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn control_mean_is_three() {
    let cfg = ScenarioConfig { n: 1_000_000, pi: 1e-6, treatment_effect: 0.0, ..Default::default() };
    let d = generate_dataset(&cfg, 0);
    let m = stats::mean(&d.event_times);
    // sd of Y is sqrt(27)
    assert!((m - 3.0).abs() < 4.0 * (27.0f64 / 1e6).sqrt(), "mean {m}");
}

#[test]
fn tau_matches_quadrature() {
    for (link, a, q) in [(Link::Linear, 0.0, 0.5), (Link::Linear, 1.0, 0.35), (Link::Quadratic, 2.0, 0.5)] {
        let cfg = ScenarioConfig { link, a, tau_quantile: q, ..Default::default() };
        let mc = resolve_tau(&cfg);
        let exact = quadrature_tau(link, a, q);
        assert!((mc / exact - 1.0).abs() < 3e-3, "{link} a={a} q={q}: {mc} vs {exact}");
    }
}

#[test]
fn truth_matches_quadrature_and_other_seeds() {
    let cfg = ScenarioConfig::default();
    let tau = resolve_tau(&cfg);
    let truth = true_rmst_difference(&cfg, tau);
    assert!(truth.std_err < 0.002);
    let restricted = |m: f64| m * (1.0 - (-tau / m).exp());
    let exact = integrate_u(|u| restricted(cfg.link.mean(0.0, 0.5, u)) - restricted(cfg.link.mean(0.0, 0.0, u)));
    assert!((truth.value - exact).abs() < 4.0 * truth.std_err + 1e-9, "{} vs {exact}", truth.value);

    let a = true_rmst_difference_with(&cfg, tau, 101, 2_000_000);
    let b = true_rmst_difference_with(&cfg, tau, 202, 2_000_000);
    let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 2.0 * se.max(1e-12) + 1e-12);
}

#[test]
fn null_scenario_is_calibrated() {
    let cfg = ScenarioConfig {
        n: 500,
        treatment_effect: 0.0,
        censor_rate: 0.1,
        replicates: 2000,
        seed: 77,
        ..Default::default()
    };
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.true_effect, 0.0);
    for cov in [r.km_coverage, r.pv_coverage] {
        assert!((0.935..=0.965).contains(&cov), "coverage {cov}");
    }
    // Monte Carlo se of the mean estimate is about 0.0009 here
    assert!(r.km_bias.abs() < 0.005 && r.pv_bias.abs() < 0.005);
}

#[test]
fn planned_sample_size_reaches_target_power() {
    let pilot = ScenarioConfig { replicates: 2000, seed: 31, ..Default::default() };
    let p = run_scenario(&pilot).unwrap();
    // per-subject variance of the unadjusted difference
    let base_var_unit = p.km_variance.unwrap() * pilot.n as f64 * 0.25;
    let n = required_sample_size(&SampleSizeInput {
        delta: p.true_effect,
        base_var_unit,
        reduction: p.predicted_reduction,
        pi: 0.5,
        alpha: 0.05,
        power: 0.8,
    })
    .unwrap();
    let check = ScenarioConfig { n: n as usize, replicates: 4000, seed: 32, ..pilot };
    let r = run_scenario(&check).unwrap();
    assert!((r.pv_rejection_rate - 0.8).abs() <= 0.03, "n = {n}, power {}", r.pv_rejection_rate);
}

#[test]
fn fast_pseudovalues_are_much_faster() {
    let cfg = ScenarioConfig { n: 10_000, censor_rate: 0.1, ..Default::default() };
    let d = generate_dataset(&cfg, 0);
    let (times, events) = (d.times(), d.events());
    let tau = resolve_tau(&cfg);
    let t0 = std::time::Instant::now();
    let fast = pseudovalues_fast_times(&times, &events, tau).unwrap();
    let fast_time = t0.elapsed();
    let t0 = std::time::Instant::now();
    let naive = pseudovalues_naive_times(&times, &events, tau).unwrap();
    let naive_time = t0.elapsed();
    let worst = fast.values.iter().zip(&naive.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9);
    assert!(
        naive_time.as_secs_f64() >= 50.0 * fast_time.as_secs_f64(),
        "fast {fast_time:?}, naive {naive_time:?}"
    );
}
