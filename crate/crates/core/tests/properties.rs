use cic::dgp::gen_did;
use cic::eif::{psi_att, psi_cdt};
use cic::estimator::{confidence_interval, median_adjust, plugin_counterfactuals};
use cic::nuisance::{FnNuisance, NuisanceOptions};
use cic::quadrature::QuadratureConfig;
use cic::Observation;
use proptest::prelude::*;

fn eta(pi: f64, slope: f64) -> FnNuisance<f64> {
    FnNuisance::new(move |y: f64, _: &[f64]| 1.2 * y + 0.3, move |x: f64, _: &[f64]| (slope * x).exp(), pi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn median_adjust_is_translation_equivariant(
        reps in proptest::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..9),
        shift in -10.0f64..10.0,
    ) {
        let (t, s) = median_adjust(&reps);
        let moved: Vec<_> = reps.iter().map(|&(a, b)| (a + shift, b)).collect();
        let (tm, sm) = median_adjust(&moved);
        prop_assert!((tm - t - shift).abs() < 1e-9);
        prop_assert!((sm - s).abs() < 1e-9 * s.max(1.0));
        prop_assert!(sm >= 0.0);
    }

    #[test]
    fn interval_is_symmetric_and_nested(theta in -5.0f64..5.0, sigma2 in 0.0f64..4.0, n in 1usize..5000) {
        let (lo, hi) = confidence_interval(theta, sigma2, n, 0.05);
        let (lo90, hi90) = confidence_interval(theta, sigma2, n, 0.10);
        prop_assert!(((hi - theta) - (theta - lo)).abs() < 1e-12);
        prop_assert!(lo <= lo90 && hi90 <= hi);
    }

    #[test]
    fn att_score_is_affine_in_theta(
        y0 in -3.0f64..3.0, y1 in -3.0f64..3.0, a in 0u8..2,
        t1 in -2.0f64..2.0, t2 in -2.0f64..2.0, pi in 0.1f64..0.9, slope in -0.5f64..0.5,
    ) {
        let e = eta(pi, slope);
        let q = QuadratureConfig::default();
        let w = Observation::new(y0, y1, a, &[]);
        let d = psi_att(&w, t1, &e, &q).unwrap() - psi_att(&w, t2, &e, &q).unwrap();
        prop_assert!((d + f64::from(a) / pi * (t1 - t2)).abs() < 1e-9);
    }

    #[test]
    fn control_cdt_score_sign(y0 in -3.0f64..3.0, y1 in -3.0f64..3.0, y in -3.0f64..3.0, v in 0.05f64..0.95) {
        // A control unit contributes only through the odds-weighted indicator
        // difference, which is zero unless y lies between y1 and gamma.
        let e = eta(0.4, 0.2);
        let w = Observation::new(y0, y1, 0, &[]);
        let g = 1.2 * y0 + 0.3;
        let s = psi_cdt(&w, y, v, &e);
        let between = (y1.min(g) <= y && y < y1.max(g)) || (y1.min(g) < y && y <= y1.max(g));
        if !between {
            prop_assert!(s.abs() < 1e-12, "score {s}");
        }
    }

    #[test]
    fn counterfactuals_follow_increasing_affine_maps(seed in 0u64..50, scale in 0.2f64..5.0, shift in -5.0f64..5.0) {
        let (d, _) = gen_did(150, 1.0, 2.0, 0.5, seed).unwrap();
        let opts = NuisanceOptions::default();
        let base = plugin_counterfactuals(&d, &opts).unwrap();
        let moved = plugin_counterfactuals(&d.map_outcomes(|y| scale * y + shift), &opts).unwrap();
        for (b, m) in base.iter().zip(&moved) {
            prop_assert!((scale * b + shift - m).abs() < 1e-9 * (1.0 + m.abs()));
        }
    }
}
