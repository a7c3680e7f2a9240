use crate::error::{Error, Result};
use crate::scalar::Scalar;

const BISECTION_STEPS: usize = 200;

/// Smallest `x` in `(lo, hi]` with `f(x) >= 0` for nondecreasing `f` with
/// `f(lo) < 0 <= f(hi)`.
///
/// `knots` are the candidate jump locations of `f`. The bracketing knots are
/// found by binary search; the root inside `(prev, knot]` is then refined by
/// bisection, which returns the knot itself when `f` is flat in between.
pub fn solve_quantile_root<T: Scalar>(mut f: impl FnMut(T) -> T, bracket: (T, T), knots: &[T]) -> Result<T> {
    let (lo, hi) = bracket;
    if !(lo < hi) || !(f(lo) < T::zero()) || !(f(hi) >= T::zero()) {
        return Err(Error::NoBracket { lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let mut pts: Vec<T> = knots.iter().copied().filter(|&k| k > lo && k < hi).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    pts.dedup();
    pts.push(hi);
    // First knot with f >= 0.
    let (mut a, mut b) = (0usize, pts.len() - 1);
    while a < b {
        let m = (a + b) / 2;
        if f(pts[m]) >= T::zero() {
            b = m;
        } else {
            a = m + 1;
        }
    }
    let mut right = pts[a];
    let mut left = if a == 0 { lo } else { pts[a - 1] };
    for _ in 0..BISECTION_STEPS {
        let mid = left + (right - left) / T::lit(2.0);
        if !(mid > left && mid < right) {
            break;
        }
        if f(mid) >= T::zero() {
            right = mid;
        } else {
            left = mid;
        }
    }
    Ok(right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ecdf(xs: &[f64]) -> impl Fn(f64) -> f64 + '_ {
        move |t| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64
    }

    #[test]
    fn generalized_inverse_of_ecdf() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let f = ecdf(&xs);
        assert_eq!(solve_quantile_root(|t| f(t) - 0.5, (0.0, 5.0), &xs).unwrap(), 2.0);
        assert_eq!(solve_quantile_root(|t| f(t) - 0.75, (0.0, 5.0), &xs).unwrap(), 3.0);
    }

    #[test]
    fn continuous_root() {
        let r = solve_quantile_root(|t: f64| t - 1.5, (0.0, 4.0), &[]).unwrap();
        assert!((r - 1.5).abs() < 1e-8);
    }

    #[test]
    fn no_bracket() {
        assert!(matches!(solve_quantile_root(|t: f64| t + 10.0, (0.0, 1.0), &[]), Err(Error::NoBracket { .. })));
    }
}
