//! Smoothing kernels, rule-of-thumb bandwidths and product-kernel weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{std_dev, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Kernel density at `u` (integrates to one).
    #[inline]
    pub fn density<T: Scalar>(self, u: T) -> T {
        match self {
            Kernel::Gaussian => (-(u * u) / T::lit(2.0)).exp() / (T::TAU()).sqrt(),
            Kernel::Epanechnikov => {
                if u.abs() < T::one() {
                    T::lit(0.75) * (T::one() - u * u)
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Bandwidth selection for a smoother.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Silverman-type rule of thumb per coordinate.
    #[default]
    Auto,
    /// Rule of thumb multiplied by a factor.
    Scaled(f64),
    /// Explicit per-coordinate bandwidths.
    Fixed(Vec<f64>),
}

impl Bandwidth {
    /// Resolves per-coordinate bandwidths for the `d`-column row-major `points`.
    pub fn resolve<T: Scalar>(&self, points: &[T], d: usize) -> Result<Vec<T>> {
        if d == 0 {
            return Ok(Vec::new());
        }
        let n = points.len() / d;
        let rule = || -> Vec<T> {
            (0..d)
                .map(|j| {
                    let col: Vec<T> = (0..n).map(|i| points[i * d + j]).collect();
                    product_rule_of_thumb(&col, d)
                })
                .collect()
        };
        match self {
            Bandwidth::Auto => Ok(rule()),
            Bandwidth::Scaled(s) => {
                if !(*s > 0.0) || !s.is_finite() {
                    return Err(Error::InvalidParameter(format!("bandwidth scale must be positive, got {s}")));
                }
                Ok(rule().into_iter().map(|h| h * T::lit(*s)).collect())
            }
            Bandwidth::Fixed(h) => {
                if h.len() != d {
                    return Err(Error::DimensionMismatch(format!("{} bandwidths for {d} coordinates", h.len())));
                }
                if h.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidParameter("bandwidths must be positive and finite".into()));
                }
                Ok(h.iter().map(|&x| T::lit(x)).collect())
            }
        }
    }
}

/// Robust scale `min(sd, IQR / 1.349)`, falling back to whichever is positive.
pub fn robust_scale<T: Scalar>(xs: &[T]) -> T {
    let sd = std_dev(xs);
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / T::lit(1.349);
    let s = if iqr > T::zero() { sd.min(iqr) } else { sd };
    if s > T::zero() {
        s
    } else {
        T::one()
    }
}

/// Linear-interpolation quantile of sorted data (type 7).
fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    if sorted.is_empty() {
        return T::zero();
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * w
}

/// Silverman's rule of thumb for a univariate density estimate.
pub fn silverman<T: Scalar>(xs: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len().max(1));
    T::lit(0.9) * robust_scale(xs) * n.powf(T::lit(-0.2))
}

/// Normal-reference bandwidth for one coordinate of a `d`-dimensional product kernel.
pub fn product_rule_of_thumb<T: Scalar>(col: &[T], d: usize) -> T {
    let n = T::from_usize_lossy(col.len().max(1));
    let dd = T::from_usize_lossy(d);
    let factor = (T::lit(4.0) / ((dd + T::lit(2.0)) * n)).powf(T::one() / (dd + T::lit(4.0)));
    robust_scale(col) * factor
}

/// Product-kernel weights of stored points relative to a query point.
#[derive(Debug, Clone)]
pub struct ProductKernel<T> {
    points: Vec<T>,
    inv_h: Vec<T>,
    d: usize,
    kernel: Kernel,
}

impl<T: Scalar> ProductKernel<T> {
    pub fn new(points: Vec<T>, h: &[T], kernel: Kernel) -> Self {
        let d = h.len();
        debug_assert!(d == 0 || points.len().is_multiple_of(d));
        ProductKernel { points, inv_h: h.iter().map(|&x| T::one() / x).collect(), d, kernel }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bandwidths(&self) -> Vec<T> {
        self.inv_h.iter().map(|&x| T::one() / x).collect()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Relative weights (arbitrary common scale, maximum one for the Gaussian
    /// kernel). Never all zero: the Gaussian path is shifted by its largest
    /// exponent, and a compact kernel with empty support falls back to it.
    pub fn weights_into(&self, query: &[T], out: &mut Vec<T>) {
        let n = self.points.len().checked_div(self.d).unwrap_or(0);
        out.clear();
        if self.kernel == Kernel::Epanechnikov {
            let mut any = false;
            for i in 0..n {
                let row = &self.points[i * self.d..(i + 1) * self.d];
                let mut w = T::one();
                for j in 0..self.d {
                    let u = (query[j] - row[j]) * self.inv_h[j];
                    let k = T::one() - u * u;
                    if k <= T::zero() {
                        w = T::zero();
                        break;
                    }
                    w = w * k;
                }
                any |= w > T::zero();
                out.push(w);
            }
            if any {
                return;
            }
            out.clear();
        }
        let mut min_e = T::infinity();
        for i in 0..n {
            let row = &self.points[i * self.d..(i + 1) * self.d];
            let mut e = T::zero();
            for j in 0..self.d {
                let u = (query[j] - row[j]) * self.inv_h[j];
                e = e + u * u;
            }
            min_e = min_e.min(e);
            out.push(e);
        }
        let half = T::lit(0.5);
        for e in out.iter_mut() {
            *e = (-(*e - min_e) * half).exp();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_integrate_to_one() {
        for k in [Kernel::Gaussian, Kernel::Epanechnikov] {
            let h = 1e-3;
            let s: f64 = (-6000..6000).map(|i| k.density(i as f64 * h) * h).sum();
            assert!((s - 1.0).abs() < 1e-5, "{k:?}: {s}");
        }
    }

    #[test]
    fn bandwidth_resolution() {
        let pts: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        let auto: Vec<f64> = Bandwidth::Auto.resolve(&pts, 1).unwrap();
        let scaled: Vec<f64> = Bandwidth::Scaled(10.0).resolve(&pts, 1).unwrap();
        assert!((scaled[0] / auto[0] - 10.0).abs() < 1e-12);
        assert!(Bandwidth::Fixed(vec![0.5, 0.5]).resolve(&pts, 1).is_err());
        assert!(Bandwidth::Scaled(-1.0).resolve(&pts, 1).is_err());
        assert_eq!(Bandwidth::Fixed(vec![0.5]).resolve(&pts, 1).unwrap(), vec![0.5]);
    }

    #[test]
    fn constant_column_scale() {
        assert_eq!(robust_scale(&[2.0, 2.0, 2.0]), 1.0);
    }

    #[test]
    fn gaussian_weights_never_vanish() {
        let k = ProductKernel::new(vec![0.0, 1.0], &[1e-3], Kernel::Gaussian);
        let mut w = Vec::new();
        k.weights_into(&[1e6], &mut w);
        assert_eq!(w, vec![0.0, 1.0]);
        let e = ProductKernel::new(vec![0.0, 1.0], &[0.1], Kernel::Epanechnikov);
        e.weights_into(&[0.5], &mut w);
        assert!(w.iter().any(|&x| x > 0.0));
    }
}
