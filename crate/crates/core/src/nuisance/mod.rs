//! Nuisance functions: the transport map, treatment odds, treated share and
//! the densities entering quantile influence functions.

pub mod cdf;
pub mod cv;
pub mod density;
pub mod gamma;
pub mod nu;
pub mod quantile;
pub mod rearrange;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cdf::{fit_cond_cdf, CondCdf};
pub use cv::{select_tuning, ZETA_LADDER};
pub use density::{fit_density, DensityFn};
pub use gamma::{compose_gamma, GammaMap};
pub use nu::{fit_nu, fit_nu_from, NuFn, NuLearner, NuOptions, NU_RULE_FACTOR};
pub use quantile::{fit_cond_quantile, CondQuantile};

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::kernel::{Bandwidth, Kernel};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::scalar::Scalar;

/// Anything that can stand in for `eta = (gamma, nu, pi)` in an influence function.
pub trait Nuisance<T: Scalar> {
    fn gamma(&self, y: T, l: &[T]) -> T;
    fn nu(&self, x: T, l: &[T]) -> T;
    fn pi(&self) -> T;
    /// Signed integral of `nu(., l)` from `lo` to `hi`.
    fn integrate_nu(&self, lo: T, hi: T, l: &[T], quad: &QuadratureConfig) -> Result<T> {
        integrate(|x| self.nu(x, l), lo, hi, quad)
    }
    /// Density of `Y1` among the treated.
    fn density_y1_treated(&self, _x: T) -> Option<T> {
        None
    }
    /// Density of `gamma(Y0, L)` among the treated.
    fn density_gamma_treated(&self, _x: T) -> Option<T> {
        None
    }
}

impl<T: Scalar, N: Nuisance<T> + ?Sized> Nuisance<T> for &N {
    fn gamma(&self, y: T, l: &[T]) -> T {
        (**self).gamma(y, l)
    }
    fn nu(&self, x: T, l: &[T]) -> T {
        (**self).nu(x, l)
    }
    fn pi(&self) -> T {
        (**self).pi()
    }
    fn integrate_nu(&self, lo: T, hi: T, l: &[T], quad: &QuadratureConfig) -> Result<T> {
        (**self).integrate_nu(lo, hi, l, quad)
    }
    fn density_y1_treated(&self, x: T) -> Option<T> {
        (**self).density_y1_treated(x)
    }
    fn density_gamma_treated(&self, x: T) -> Option<T> {
        (**self).density_gamma_treated(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NuisanceOptions {
    pub kernel: Kernel,
    /// Covariate bandwidths of the conditional CDFs.
    pub bandwidth: Bandwidth,
    pub nu_learner: NuLearner,
    /// Bandwidths of the odds regression over `(x, l)`.
    pub nu_bandwidth: Bandwidth,
    pub eps_clip: f64,
    pub f_min: f64,
    /// Density bandwidth; Silverman's rule when absent.
    pub density_bandwidth: Option<f64>,
}

impl Default for NuisanceOptions {
    fn default() -> Self {
        NuisanceOptions {
            kernel: Kernel::Gaussian,
            bandwidth: Bandwidth::Auto,
            nu_learner: NuLearner::Kernel,
            nu_bandwidth: Bandwidth::Auto,
            eps_clip: 0.01,
            f_min: 1e-3,
            density_bandwidth: None,
        }
    }
}

impl NuisanceOptions {
    pub fn nu_options(&self) -> NuOptions {
        NuOptions { learner: self.nu_learner, kernel: self.kernel, bandwidth: self.nu_bandwidth.clone(), eps_clip: self.eps_clip }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps_clip > 0.0 && self.eps_clip < 0.5) {
            return Err(Error::InvalidParameter(format!("eps_clip must lie in (0, 0.5), got {}", self.eps_clip)));
        }
        if !(self.f_min > 0.0) || !self.f_min.is_finite() {
            return Err(Error::InvalidParameter(format!("f_min must be positive, got {}", self.f_min)));
        }
        if let Some(h) = self.density_bandwidth {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidParameter(format!("density bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

/// Nuisances fitted on one training sample.
#[derive(Debug, Clone)]
pub struct NuisanceSet<T> {
    pub gamma: GammaMap<T>,
    pub nu: NuFn<T>,
    pub pi: T,
    pub dens_y1_treated: Option<DensityFn<T>>,
    pub dens_gamma_treated: Option<DensityFn<T>>,
}

impl<T: Scalar> Nuisance<T> for NuisanceSet<T> {
    fn gamma(&self, y: T, l: &[T]) -> T {
        self.gamma.eval(y, l)
    }
    fn nu(&self, x: T, l: &[T]) -> T {
        self.nu.eval(x, l)
    }
    fn pi(&self) -> T {
        self.pi
    }
    fn integrate_nu(&self, lo: T, hi: T, l: &[T], quad: &QuadratureConfig) -> Result<T> {
        match self.nu.integral(lo, hi, l) {
            Some(v) => Ok(v),
            None => integrate(|x| self.nu.eval(x, l), lo, hi, quad),
        }
    }
    fn density_y1_treated(&self, x: T) -> Option<T> {
        self.dens_y1_treated.as_ref().map(|d| d.eval(x))
    }
    fn density_gamma_treated(&self, x: T) -> Option<T> {
        self.dens_gamma_treated.as_ref().map(|d| d.eval(x))
    }
}

/// Shared `(value, covariates) -> value` closure.
pub type MapFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;
/// Shared univariate closure.
pub type CurveFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Nuisances given directly as closures, e.g. analytic truths.
#[derive(Clone)]
pub struct FnNuisance<T> {
    pub gamma: MapFn<T>,
    pub nu: MapFn<T>,
    pub pi: T,
    pub dens_y1_treated: Option<CurveFn<T>>,
    pub dens_gamma_treated: Option<CurveFn<T>>,
}

impl<T: Scalar> FnNuisance<T> {
    pub fn new(
        gamma: impl Fn(T, &[T]) -> T + Send + Sync + 'static,
        nu: impl Fn(T, &[T]) -> T + Send + Sync + 'static,
        pi: T,
    ) -> Self {
        FnNuisance { gamma: Arc::new(gamma), nu: Arc::new(nu), pi, dens_y1_treated: None, dens_gamma_treated: None }
    }
}

impl<T> std::fmt::Debug for FnNuisance<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnNuisance").finish_non_exhaustive()
    }
}

impl<T: Scalar> Nuisance<T> for FnNuisance<T> {
    fn gamma(&self, y: T, l: &[T]) -> T {
        (self.gamma)(y, l)
    }
    fn nu(&self, x: T, l: &[T]) -> T {
        (self.nu)(x, l)
    }
    fn pi(&self) -> T {
        self.pi
    }
    fn density_y1_treated(&self, x: T) -> Option<T> {
        self.dens_y1_treated.as_ref().map(|d| d(x))
    }
    fn density_gamma_treated(&self, x: T) -> Option<T> {
        self.dens_gamma_treated.as_ref().map(|d| d(x))
    }
}

/// Share of treated units.
pub fn estimate_pi<T: Scalar>(train: &PanelDataset<T>) -> Result<T> {
    let (t, c) = (train.n_treated(), train.n_control());
    if t == 0 || c == 0 {
        return Err(Error::DegenerateArm { treated: t, control: c });
    }
    Ok(T::from_usize_lossy(t) / T::from_usize_lossy(t + c))
}

/// Transport map fitted on the control units of `train`.
pub fn fit_gamma<T: Scalar>(train: &PanelDataset<T>, opts: &NuisanceOptions) -> Result<GammaMap<T>> {
    let controls = train.subset(&train.arm_indices(0));
    let cdf = fit_cond_cdf(controls.y0(), controls.l(), controls.p(), opts.kernel, &opts.bandwidth)?;
    let quant = fit_cond_quantile(controls.y1(), controls.l(), controls.p(), opts.kernel, &opts.bandwidth)?;
    compose_gamma(cdf, quant)
}

/// Fits `(gamma, nu, pi)` on `train`, plus the two treated-arm densities when
/// `with_densities` is set.
pub fn fit_nuisances<T: Scalar>(train: &PanelDataset<T>, opts: &NuisanceOptions, with_densities: bool) -> Result<NuisanceSet<T>> {
    opts.check()?;
    let pi = estimate_pi(train)?;
    let gamma = fit_gamma(train, opts)?;
    let nu = fit_nu(train, &gamma, &opts.nu_options())?;
    let (dens_y1_treated, dens_gamma_treated) = if with_densities {
        let treated = train.subset(&train.arm_indices(1));
        let h = opts.density_bandwidth.map(T::lit);
        let f_min = T::lit(opts.f_min);
        let g: Vec<T> = treated.observations().map(|o| gamma.eval(o.y0, o.l)).collect();
        (
            Some(fit_density(treated.y1(), opts.kernel, h, f_min)?),
            Some(fit_density(&g, opts.kernel, h, f_min)?),
        )
    } else {
        (None, None)
    };
    Ok(NuisanceSet { gamma, nu, pi, dens_y1_treated, dens_gamma_treated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_examples() {
        let d = PanelDataset::without_covariates(vec![0.0; 4], vec![0.0; 4], vec![1, 0, 1, 0]).unwrap();
        assert_eq!(estimate_pi(&d).unwrap(), 0.5);
        let d = PanelDataset::without_covariates(vec![0.0; 4], vec![0.0; 4], vec![1, 0, 0, 0]).unwrap();
        assert_eq!(estimate_pi(&d).unwrap(), 0.25);
        let all = PanelDataset::from_parts_unchecked(vec![0.0; 3], vec![0.0; 3], vec![1, 1, 1], vec![], 0);
        assert!(matches!(estimate_pi(&all), Err(Error::DegenerateArm { .. })));
    }

    #[test]
    fn option_checks() {
        assert!(NuisanceOptions::default().check().is_ok());
        assert!(NuisanceOptions { eps_clip: 0.0, ..Default::default() }.check().is_err());
        assert!(NuisanceOptions { f_min: 0.0, ..Default::default() }.check().is_err());
    }

    #[test]
    fn fitted_set_has_requested_members() {
        let n = 40;
        let y0: Vec<f64> = (0..n).map(|i| i as f64 / 7.0).collect();
        let y1: Vec<f64> = y0.iter().map(|y| y + 1.0).collect();
        let a: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let d = PanelDataset::without_covariates(y0, y1, a).unwrap();
        let s = fit_nuisances(&d, &NuisanceOptions::default(), false).unwrap();
        assert!(s.density_y1_treated(1.0).is_none());
        assert_eq!(s.pi(), 0.5);
        let s = fit_nuisances(&d, &NuisanceOptions::default(), true).unwrap();
        assert!(s.density_gamma_treated(2.0).unwrap() > 0.0);
    }
}
