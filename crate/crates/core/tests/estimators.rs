use cic::dgp::{draw_units, gen_did, gen_stm, Effect, StmConfig};
use cic::estimator::{estimate, plugin_att, plugin_counterfactuals, plugin_qtt, CrossFitConfig};
use cic::nuisance::NuisanceOptions;
use cic::{Dataset, EstimandSpec};

fn arm_mean(d: &Dataset, arm: u8) -> f64 {
    let v: Vec<f64> = d.observations().filter(|o| o.a == arm).map(|o| o.y1 - o.y0).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn did_design_diff_of_means() {
    let (d, truth) = gen_did(100_000, 1.0, 2.0, 0.5, 1).unwrap();
    let did = arm_mean(&d, 1) - arm_mean(&d, 0);
    assert!((did - 2.0).abs() < 0.05, "{did}");
    assert_eq!(truth.att_true, 2.0);
    let share = d.n_treated() as f64 / d.len() as f64;
    assert!((share - truth.pi_true).abs() < 0.01, "{share} vs {}", truth.pi_true);
}

#[test]
fn plugin_reduces_to_did_under_parallel_trends() {
    let (d, _) = gen_did(4000, -0.5, 1.0, 0.4, 2).unwrap();
    let plugin = plugin_att(&d, &NuisanceOptions::default()).unwrap();
    let did = arm_mean(&d, 1) - arm_mean(&d, 0);
    assert!((plugin - did).abs() < 0.05, "{plugin} vs {did}");
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn transported_controls_match_treated_counterfactuals() {
    let cfg = StmConfig::preset("stm-exp", 10_000, 3).unwrap();
    let (d, _) = gen_stm(&cfg).unwrap();
    let transported = plugin_counterfactuals(&d, &NuisanceOptions::default()).unwrap();
    assert_eq!(transported.len(), d.n_treated());
    let fresh: Vec<f64> = draw_units(&cfg, 10_000, 99).into_iter().filter(|u| u.a == 1).map(|u| u.y1_untreated).collect();
    let (n, m) = (transported.len() as f64, fresh.len() as f64);
    let critical = 1.628 * ((n + m) / (n * m)).sqrt();
    let stat = ks(transported, fresh);
    assert!(stat < critical, "KS {stat} >= {critical}");
}

fn null_design(n: usize, seed: u64) -> StmConfig {
    StmConfig { effect: Effect::Additive { delta: 0.0 }, ..StmConfig::preset("stm-q3", n, seed).unwrap() }
}

#[test]
fn quantile_effects_vanish_without_treatment_effect() {
    let (d, truth) = gen_stm(&null_design(4000, 4)).unwrap();
    assert_eq!(truth.att_true, 0.0);
    for &tau in &[0.25, 0.5, 0.75] {
        let q = plugin_qtt(&d, tau, &NuisanceOptions::default()).unwrap();
        assert!(q.abs() < 0.15, "plugin qtt({tau}) = {q}");
    }
    let (mut covered, mut total) = (0, 0.0);
    for seed in 0..10 {
        let (d, _) = gen_stm(&null_design(2000, 100 + seed)).unwrap();
        let r = estimate(&d, &EstimandSpec::Qtt { tau: 0.5 }, &CrossFitConfig { seed, ..Default::default() }).unwrap();
        covered += usize::from(r.ci_lo < 0.0 && 0.0 < r.ci_hi);
        total += r.theta_hat;
    }
    assert!(covered >= 8, "{covered}/10 intervals cover zero");
    assert!((total / 10.0).abs() < 0.05, "mean {}", total / 10.0);
}

#[test]
fn cdt_is_a_distribution_function() {
    let (d, _) = gen_did(3000, 1.0, 2.0, 0.5, 5).unwrap();
    let cfg = CrossFitConfig { seed: 2, ..Default::default() };
    let mut prev = -1.0;
    for &y in &[-1.0, 0.0, 1.0, 2.0, 3.0] {
        let r = estimate(&d, &EstimandSpec::Cdt { y }, &cfg).unwrap();
        assert!(r.theta_hat >= prev - 0.02, "cdt({y}) = {} after {prev}", r.theta_hat);
        assert!((-0.05..=1.05).contains(&r.theta_hat));
        prev = r.theta_hat;
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let (d, _) = gen_did(1500, 1.0, 2.0, 0.5, 6).unwrap();
    let cfg = CrossFitConfig { seed: 3, ..Default::default() };
    let r64 = estimate(&d, &EstimandSpec::Att, &cfg).unwrap();
    let r32 = estimate(&d.cast::<f32>(), &EstimandSpec::Att, &cfg).unwrap();
    assert!((f64::from(r32.theta_hat) - r64.theta_hat).abs() < 1e-2, "{} vs {}", r32.theta_hat, r64.theta_hat);
    assert!(r32.ci_lo < r32.ci_hi);
}

#[test]
fn estimates_are_seed_deterministic() {
    let (d, _) = gen_did(800, 1.0, 2.0, 0.5, 7).unwrap();
    let cfg = CrossFitConfig { seed: 11, reps: 3, ..Default::default() };
    let a = estimate(&d, &EstimandSpec::Att, &cfg).unwrap();
    let b = estimate(&d, &EstimandSpec::Att, &cfg).unwrap();
    assert_eq!(a, b);
    let c = estimate(&d, &EstimandSpec::Att, &CrossFitConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.per_rep, c.per_rep);
}
