use crate::error::{Error, Result};
use crate::kernel::{silverman, Kernel};
use crate::scalar::Scalar;

/// Univariate kernel density estimate floored at `f_min`.
#[derive(Debug, Clone)]
pub struct DensityFn<T> {
    samples: Vec<T>,
    h: T,
    kernel: Kernel,
    f_min: T,
}

/// Fits a kernel density to `samples`. `bandwidth = None` uses Silverman's rule.
pub fn fit_density<T: Scalar>(samples: &[T], kernel: Kernel, bandwidth: Option<T>, f_min: T) -> Result<DensityFn<T>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: samples.len() });
    }
    if !(f_min >= T::zero()) {
        return Err(Error::InvalidParameter("density floor must be nonnegative".into()));
    }
    let h = match bandwidth {
        Some(h) if h > T::zero() && h.is_finite() => h,
        Some(_) => return Err(Error::InvalidParameter("density bandwidth must be positive".into())),
        None => silverman(samples),
    };
    let mut samples = samples.to_vec();
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    Ok(DensityFn { samples, h, kernel, f_min })
}

impl<T: Scalar> DensityFn<T> {
    pub fn bandwidth(&self) -> T {
        self.h
    }

    pub fn f_min(&self) -> T {
        self.f_min
    }

    pub fn eval(&self, x: T) -> T {
        // Only samples within the kernel's effective reach contribute.
        let reach = self.h
            * match self.kernel {
                Kernel::Gaussian => T::lit(40.0),
                Kernel::Epanechnikov => T::one(),
            };
        let lo = self.samples.partition_point(|&s| s < x - reach);
        let hi = self.samples.partition_point(|&s| s <= x + reach);
        let sum: T = self.samples[lo..hi].iter().map(|&s| self.kernel.density((x - s) / self.h)).sum();
        let f = sum / (T::from_usize_lossy(self.samples.len()) * self.h);
        f.max(self.f_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_far_outside() {
        let d = fit_density(&[0.0, 1.0, 2.0], Kernel::Gaussian, None, 1e-3).unwrap();
        assert_eq!(d.eval(1e6), 1e-3);
        let e = fit_density(&[0.0, 1.0, 2.0], Kernel::Epanechnikov, Some(0.5), 1e-3).unwrap();
        assert_eq!(e.eval(-10.0), 1e-3);
    }

    #[test]
    fn exact_two_point_value() {
        let d = fit_density(&[-1.0, 1.0], Kernel::Gaussian, Some(1.0), 0.0).unwrap();
        let want = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d.eval(0.0) - want).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_density(&[1.0], Kernel::Gaussian, None, 1e-3), Err(Error::InsufficientData { .. })));
        assert!(fit_density(&[1.0, 2.0], Kernel::Gaussian, Some(-1.0), 1e-3).is_err());
    }
}
