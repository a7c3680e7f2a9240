use cic::dgp::{Effect, StmConfig};
use cic::estimator::CrossFitConfig;
use cic::validation::{coverage_study, phi_at, rate_probe, Perturbation};

#[test]
fn estimating_function_is_centred_at_the_truth() {
    for name in ["did", "stm-exp", "stm-power"] {
        let cfg = StmConfig::preset(name, 0, 0).unwrap();
        let phi = phi_at(0.0, &cfg, &Perturbation::zero(), 50_000, 1).unwrap();
        assert!(phi.abs() < 0.03, "{name}: {phi}");
    }
}

#[test]
fn share_perturbation_only_rescales() {
    // With gamma and nu at the truth, psi is (pi / pi_lambda) times its
    // unperturbed value, draw by draw.
    let cfg = StmConfig::preset("did", 0, 0).unwrap();
    let pert = Perturbation::constant(0.0, 0.0, 0.05);
    let base = phi_at(0.0, &cfg, &pert, 5000, 2).unwrap();
    let pi = cfg.pi_true();
    for &lambda in &[0.2, 0.5, 0.9] {
        let moved = phi_at(lambda, &cfg, &pert, 5000, 2).unwrap();
        let expected = base * pi / (pi + lambda * 0.05);
        assert!((moved - expected).abs() <= 1e-12 * base.abs().max(1.0), "lambda {lambda}: {moved} vs {expected}");
    }
}

#[test]
fn nuisance_errors_shrink_with_n() {
    for name in ["did", "stm-exp"] {
        let cfg = StmConfig::preset(name, 0, 0).unwrap();
        let rows = rate_probe(&cfg, &[500, 2000, 8000], &[1.0, 10.0], 3).unwrap();
        let at = |n: usize, s: f64| rows.iter().find(|r| r.n == n && r.bandwidth_scale == s).unwrap();
        for pair in [[500, 2000], [2000, 8000]] {
            let (a, b) = (at(pair[0], 1.0), at(pair[1], 1.0));
            assert!(b.gamma_l2 < a.gamma_l2, "{name} gamma {pair:?}: {} -> {}", a.gamma_l2, b.gamma_l2);
            assert!(b.nu_l2 < a.nu_l2, "{name} nu {pair:?}: {} -> {}", a.nu_l2, b.nu_l2);
        }
    }
    // The covariate-dependent design is the one where smoothing matters.
    let rows = rate_probe(&StmConfig::preset("stm-exp", 0, 0).unwrap(), &[8000], &[1.0, 10.0], 4).unwrap();
    let (tuned, smooth) = (&rows[0], &rows[1]);
    assert!(smooth.gamma_l2 > tuned.gamma_l2, "{} vs {}", smooth.gamma_l2, tuned.gamma_l2);
    assert!(smooth.nu_l2 > tuned.nu_l2, "{} vs {}", smooth.nu_l2, tuned.nu_l2);
}

#[test]
fn coverage_study_is_reproducible() {
    let cfg = StmConfig::preset("did", 400, 0).unwrap();
    let a = coverage_study(&cfg, &CrossFitConfig::default(), 4, 5).unwrap();
    let b = coverage_study(&cfg, &CrossFitConfig::default(), 4, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 4);
    assert_eq!(a.covered, a.rows.iter().filter(|r| r.covered).count());
}

#[test]
fn no_bias_under_the_null() {
    let cfg = StmConfig { effect: Effect::Additive { delta: 0.0 }, ..StmConfig::preset("stm-q3", 1000, 0).unwrap() };
    let r = coverage_study(&cfg, &CrossFitConfig::default(), 40, 6).unwrap();
    assert_eq!(r.att_true, 0.0);
    assert!(r.mean_bias.abs() <= 3.0 * r.bias_se, "bias {} se {}", r.mean_bias, r.bias_se);
}
