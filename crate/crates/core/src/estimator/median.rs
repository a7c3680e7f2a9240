use crate::normal::two_sided_critical;
use crate::scalar::Scalar;

/// Median with even-length samples averaged over the two central values.
pub fn median<T: Scalar>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / T::lit(2.0)
    }
}

/// Aggregates per-repetition `(theta, sigma2)` pairs:
/// `theta = med theta_s`, `sigma2 = med(sigma2_s + (theta_s - theta)^2)`.
pub fn median_adjust<T: Scalar>(reps: &[(T, T)]) -> (T, T) {
    assert!(!reps.is_empty(), "median adjustment needs at least one repetition");
    let theta = median(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
    let inflated: Vec<T> = reps.iter().map(|&(t, s)| s + (t - theta) * (t - theta)).collect();
    (theta, median(&inflated))
}

/// `theta +- z_{alpha/2} sigma / sqrt(n)`.
pub fn confidence_interval<T: Scalar>(theta: T, sigma2: T, n: usize, alpha: f64) -> (T, T) {
    let half = T::lit(two_sided_critical(alpha)) * (sigma2.max(T::zero()) / T::from_usize_lossy(n)).sqrt();
    (theta - half, theta + half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_cases() {
        assert_eq!(median_adjust(&[(1.5, 0.7)]), (1.5, 0.7));
        assert_eq!(median_adjust(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]), (2.0, 2.0));
        assert_eq!(median_adjust(&[(2.0, 4.0), (2.0, 6.0)]), (2.0, 5.0));
    }

    #[test]
    fn intervals() {
        let (lo, hi) = confidence_interval(0.0, 1.0, 100, 0.05);
        assert!((hi - 0.195_996_398_454_005_4f64).abs() < 1e-12 && (lo + hi).abs() < 1e-15);
        assert_eq!(confidence_interval(3.0, 0.0, 10, 0.05), (3.0, 3.0));
        let (lo, hi) = confidence_interval(1.0, 1.0, 1, 0.32);
        assert!((hi - 1.0f64 - 0.994_457_883_209_753_2).abs() < 1e-12);
        assert!((1.0f64 - lo - 0.994_457_883_209_753_2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut reps in proptest::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..9), seed in 0u64..100) {
            let base = median_adjust(&reps);
            let k = reps.len();
            reps.rotate_left((seed as usize) % k);
            reps.reverse();
            prop_assert_eq!(median_adjust(&reps), base);
        }
    }
}
