use crate::error::{Error, Result};
use crate::kernel::{Bandwidth, Kernel, ProductKernel};
use crate::nuisance::rearrange::{rearrange_cdf, GRID_POINTS};
use crate::scalar::Scalar;

/// Kernel-weighted conditional CDF `(y, l) -> Pr(Y <= y | L = l)`.
///
/// The regression of `1{Y <= y}` on `L` uses nonnegative Nadaraya-Watson
/// weights, so for fixed `l` the estimate is a weighted empirical CDF:
/// right-continuous, nondecreasing and valued in `[0, 1]`. Without
/// covariates it is exactly the empirical CDF.
#[derive(Debug, Clone)]
pub struct CondCdf<T> {
    sorted_y: Vec<T>,
    /// Sorted position -> sample index.
    order: Vec<usize>,
    kernel: Option<ProductKernel<T>>,
    p: usize,
}

/// Fits the conditional CDF of `ys` given the row-major `p`-column covariates `ls`.
pub fn fit_cond_cdf<T: Scalar>(ys: &[T], ls: &[T], p: usize, kernel: Kernel, bandwidth: &Bandwidth) -> Result<CondCdf<T>> {
    if ys.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: ys.len() });
    }
    if ls.len() != ys.len() * p {
        return Err(Error::DimensionMismatch(format!("{} covariate entries for {} samples x {p}", ls.len(), ys.len())));
    }
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&i, &j| ys[i].partial_cmp(&ys[j]).expect("finite outcomes").then(i.cmp(&j)));
    let sorted_y = order.iter().map(|&i| ys[i]).collect();
    let kernel = if p == 0 {
        None
    } else {
        let h = bandwidth.resolve(ls, p)?;
        Some(ProductKernel::new(ls.to_vec(), &h, kernel))
    };
    Ok(CondCdf { sorted_y, order, kernel, p })
}

impl<T: Scalar> CondCdf<T> {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.sorted_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_y.is_empty()
    }

    pub fn sorted_samples(&self) -> &[T] {
        &self.sorted_y
    }

    pub(crate) fn kernel(&self) -> Option<&ProductKernel<T>> {
        self.kernel.as_ref()
    }

    /// Covariate bandwidths (empty without covariates).
    pub fn bandwidths(&self) -> Vec<T> {
        self.kernel.as_ref().map(|k| k.bandwidths()).unwrap_or_default()
    }

    /// Number of samples `<= y`.
    #[inline]
    fn rank(&self, y: T) -> usize {
        self.sorted_y.partition_point(|&v| v <= y)
    }

    /// Kernel weights of the samples (sample order) at covariate value `l`.
    pub(crate) fn weights(&self, l: &[T], out: &mut Vec<T>) {
        match &self.kernel {
            Some(k) => k.weights_into(l, out),
            None => {
                out.clear();
                out.resize(self.len(), T::one());
            }
        }
    }

    pub fn eval(&self, y: T, l: &[T]) -> T {
        if self.p == 0 {
            return T::from_usize_lossy(self.rank(y)) / T::from_usize_lossy(self.len());
        }
        let mut w = Vec::with_capacity(self.len());
        self.weights(l, &mut w);
        self.eval_weighted(y, &w)
    }

    /// CDF at `y` under precomputed sample-order weights.
    pub(crate) fn eval_weighted(&self, y: T, w: &[T]) -> T {
        let r = self.rank(y);
        let mut below = T::zero();
        let mut total = T::zero();
        for (pos, &i) in self.order.iter().enumerate() {
            if pos == r {
                below = total;
            }
            total = total + w[i];
        }
        if r == self.len() {
            below = total;
        }
        below / total
    }

    /// Generalized inverse `inf{y : F(y | l) >= u}` over the sample support,
    /// clamped to the smallest and largest sample at the boundaries.
    pub(crate) fn inverse_weighted(&self, u: T, w: Option<&[T]>) -> T {
        let n = self.len();
        if u <= T::zero() {
            return self.sorted_y[0];
        }
        if u >= T::one() {
            return self.sorted_y[n - 1];
        }
        let slack = T::lit(8.0) * T::epsilon();
        match w {
            None => {
                let nn = T::from_usize_lossy(n);
                let target = u * nn - slack * nn;
                let k = target.ceil().to_usize().unwrap_or(1).clamp(1, n);
                self.sorted_y[k - 1]
            }
            Some(w) => {
                let total: T = self.order.iter().map(|&i| w[i]).sum();
                let target = u * total - slack * total;
                let mut acc = T::zero();
                for (pos, &i) in self.order.iter().enumerate() {
                    acc = acc + w[i];
                    if acc >= target && w[i] > T::zero() {
                        return self.sorted_y[pos];
                    }
                }
                self.sorted_y[n - 1]
            }
        }
    }

    /// The CDF at `l` on an evenly spaced grid of [`GRID_POINTS`] spanning the
    /// sample range, after monotone rearrangement and clipping to `[0, 1]`.
    pub fn on_grid(&self, l: &[T]) -> Vec<(T, T)> {
        let lo = self.sorted_y[0];
        let hi = self.sorted_y[self.len() - 1];
        let mut w = Vec::new();
        self.weights(l, &mut w);
        let step = (hi - lo) / T::from_usize_lossy(GRID_POINTS - 1);
        let ys: Vec<T> = (0..GRID_POINTS).map(|g| lo + step * T::from_usize_lossy(g)).collect();
        let mut fs: Vec<T> = ys.iter().map(|&y| self.eval_weighted(y, &w)).collect();
        rearrange_cdf(&mut fs);
        ys.into_iter().zip(fs).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_cdf_without_covariates() {
        let f = fit_cond_cdf(&[3.0, 1.0, 2.0], &[], 0, Kernel::Gaussian, &Bandwidth::Auto).unwrap();
        assert_eq!(f.eval(2.0, &[]), 2.0 / 3.0);
        assert_eq!(f.eval(0.5, &[]), 0.0);
        assert_eq!(f.eval(3.0, &[]), 1.0);
    }

    #[test]
    fn needs_two_samples() {
        let e = fit_cond_cdf(&[1.0], &[], 0, Kernel::Gaussian, &Bandwidth::Auto).unwrap_err();
        assert_eq!(e, Error::InsufficientData { needed: 2, got: 1 });
    }

    #[test]
    fn weighted_cdf_is_monotone_and_bounded() {
        let ys: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 7.0).collect();
        let ls: Vec<f64> = (0..50).map(|i| (i as f64 / 10.0).sin()).collect();
        let f = fit_cond_cdf(&ys, &ls, 1, Kernel::Epanechnikov, &Bandwidth::Auto).unwrap();
        let mut prev = 0.0;
        for g in 0..200 {
            let y = -1.0 + g as f64 * 0.05;
            let v = f.eval(y, &[0.3]);
            assert!(v >= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        let grid = f.on_grid(&[0.3]);
        assert_eq!(grid.len(), GRID_POINTS);
        assert!(grid.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
