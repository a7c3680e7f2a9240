use crate::error::Result;
use crate::kernel::{Bandwidth, Kernel};
use crate::nuisance::cdf::{fit_cond_cdf, CondCdf};
use crate::scalar::Scalar;

/// Conditional quantile `(u, l) -> inf{y : F(y | l) >= u}` obtained by
/// inverting a fitted [`CondCdf`] over the observed outcomes.
#[derive(Debug, Clone)]
pub struct CondQuantile<T> {
    cdf: CondCdf<T>,
}

/// Fits the conditional quantile function of `ys` given covariates `ls`.
pub fn fit_cond_quantile<T: Scalar>(
    ys: &[T],
    ls: &[T],
    p: usize,
    kernel: Kernel,
    bandwidth: &Bandwidth,
) -> Result<CondQuantile<T>> {
    Ok(CondQuantile { cdf: fit_cond_cdf(ys, ls, p, kernel, bandwidth)? })
}

impl<T: Scalar> CondQuantile<T> {
    pub fn from_cdf(cdf: CondCdf<T>) -> Self {
        CondQuantile { cdf }
    }

    pub fn cdf(&self) -> &CondCdf<T> {
        &self.cdf
    }

    pub fn p(&self) -> usize {
        self.cdf.p()
    }

    /// Values of `u` outside `(0, 1)` clamp to the sample minimum / maximum.
    pub fn eval(&self, u: T, l: &[T]) -> T {
        if self.cdf.p() == 0 {
            return self.cdf.inverse_weighted(u, None);
        }
        let mut w = Vec::with_capacity(self.cdf.len());
        self.cdf.weights(l, &mut w);
        self.cdf.inverse_weighted(u, Some(&w))
    }

    pub(crate) fn eval_weighted(&self, u: T, w: &[T]) -> T {
        self.cdf.inverse_weighted(u, Some(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(ys: &[f64]) -> CondQuantile<f64> {
        fit_cond_quantile(ys, &[], 0, Kernel::Gaussian, &Bandwidth::Auto).unwrap()
    }

    #[test]
    fn empirical_quantile() {
        let q = q(&[30.0, 10.0, 20.0]);
        assert_eq!(q.eval(2.0 / 3.0, &[]), 20.0);
        assert_eq!(q.eval(1.0 / 3.0, &[]), 10.0);
        assert_eq!(q.eval(0.34, &[]), 20.0);
        assert_eq!(q.eval(1.0 - 1e-12, &[]), 30.0);
        assert_eq!(q.eval(1.0, &[]), 30.0);
        assert_eq!(q.eval(0.0, &[]), 10.0);
    }

    #[test]
    fn weighted_matches_bisection_over_support() {
        let ys: Vec<f64> = (0..40).map(|i| ((i * 13) % 40) as f64 * 0.25).collect();
        let ls: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).cos()).collect();
        let qf = fit_cond_quantile(&ys, &ls, 1, Kernel::Gaussian, &Bandwidth::Auto).unwrap();
        let l = [0.2];
        let mut support = ys.clone();
        support.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 1..20 {
            let u = k as f64 / 20.0;
            // Bisection over the sorted support for the smallest y with F(y) >= u.
            let (mut lo, mut hi) = (0usize, support.len() - 1);
            while lo < hi {
                let m = (lo + hi) / 2;
                if qf.cdf().eval(support[m], &l) >= u - 1e-12 { hi = m } else { lo = m + 1 }
            }
            assert_eq!(qf.eval(u, &l), support[lo], "u = {u}");
        }
    }
}
