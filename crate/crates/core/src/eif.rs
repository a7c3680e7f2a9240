//! Efficient influence functions for the ATT, the counterfactual distribution
//! and quantiles on the treated, and general moment-defined estimands.

use std::sync::Arc;

use crate::data::{GTildeDescriptor, Observation};
use crate::error::{Error, Result};
use crate::nuisance::Nuisance;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::scalar::Scalar;

/// Signed integral of `nu(., l)` from `lo` to `hi`.
pub fn integrate_nu<T: Scalar, N: Nuisance<T>>(lo: T, hi: T, l: &[T], eta: &N, quad: &QuadratureConfig) -> Result<T> {
    eta.integrate_nu(lo, hi, l, quad)
}

/// ATT influence function at `theta`.
pub fn psi_att<T: Scalar, N: Nuisance<T>>(w: &Observation<'_, T>, theta: T, eta: &N, quad: &QuadratureConfig) -> Result<T> {
    let g = eta.gamma(w.y0, w.l);
    let pi = eta.pi();
    if w.treated() {
        Ok((w.y1 - g - theta) / pi)
    } else {
        Ok(integrate_nu(w.y1, g, w.l, eta, quad)? / pi)
    }
}

/// `sign(y1 - gamma) * 1{min(y1, gamma) <= x <= max(y1, gamma)}`.
#[inline]
pub fn chi<T: Scalar>(x: T, y1: T, gamma: T) -> T {
    let (lo, hi) = if y1 <= gamma { (y1, gamma) } else { (gamma, y1) };
    if x < lo || x > hi || y1 == gamma {
        T::zero()
    } else if y1 > gamma {
        T::one()
    } else {
        -T::one()
    }
}

/// Influence function of the counterfactual CDF on the treated at `y`.
pub fn psi_cdt<T: Scalar, N: Nuisance<T>>(w: &Observation<'_, T>, y: T, vartheta: T, eta: &N) -> T {
    let g = eta.gamma(w.y0, w.l);
    let pi = eta.pi();
    if w.treated() {
        (indicator::<T>(g < y) - vartheta) / pi
    } else {
        -eta.nu(y, w.l) * chi(y, w.y1, g) / pi
    }
}

/// Influence function of the quantile effect `vartheta1 - vartheta2` on the
/// treated, where `vartheta1` is the `tau`-quantile of `Y1` and `vartheta2`
/// that of the counterfactual.
pub fn psi_qtt<T: Scalar, N: Nuisance<T>>(w: &Observation<'_, T>, tau: T, vartheta1: T, vartheta2: T, eta: &N) -> Result<T> {
    let f1 = eta.density_y1_treated(vartheta1).ok_or(Error::MissingDensity)?;
    let f2 = eta.density_gamma_treated(vartheta2).ok_or(Error::MissingDensity)?;
    let pi = eta.pi();
    let g = eta.gamma(w.y0, w.l);
    let a = w.a_scalar();
    let first = a / pi * (indicator::<T>(w.y1 <= vartheta1) - tau) / (-f1);
    let num = a * (indicator::<T>(g < vartheta2) - tau) + (a - T::one()) * eta.nu(vartheta2, w.l) * chi(vartheta2, w.y1, g);
    Ok(first - num / (-pi * f2))
}

#[inline]
fn indicator<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

type Fn2<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
type Fn1<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type JumpFn<T> = Arc<dyn Fn(T) -> Vec<(T, T)> + Send + Sync>;

/// Shape of `x -> g~(x, vartheta)`.
#[derive(Clone)]
pub enum Shape<T> {
    /// Differentiable in `x`.
    Smooth { value: Fn2<T>, d_x: Fn2<T> },
    /// Right-continuous step function: `base(vartheta)` below every jump, plus
    /// the jump sizes `s_j` at points `x_j <= x`, both listed by `jumps(vartheta)`.
    Step { base: Fn1<T>, jumps: JumpFn<T> },
}

/// Derivative of `vartheta -> E[g~(gamma(Y0, L), vartheta) | A = 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope<T> {
    Constant(T),
    /// The density of `gamma(Y0, L)` among the treated at `vartheta`.
    GammaDensity,
}

/// A moment function `g~(x, vartheta)` defining `vartheta` through
/// `E[g~(gamma(Y0, L), vartheta) | A = 1] = 0`.
#[derive(Clone)]
pub struct GTilde<T> {
    pub shape: Shape<T>,
    pub slope: Slope<T>,
}

impl<T> std::fmt::Debug for GTilde<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.shape {
            Shape::Smooth { .. } => "smooth",
            Shape::Step { .. } => "step",
        };
        f.debug_struct("GTilde").field("shape", &kind).field("slope", &self.slope).finish()
    }
}

impl<T: Scalar> GTilde<T> {
    /// `x - vartheta`: the counterfactual mean.
    pub fn mean() -> Self {
        GTilde {
            shape: Shape::Smooth { value: Arc::new(|x, t| x - t), d_x: Arc::new(|_, _| T::one()) },
            slope: Slope::Constant(-T::one()),
        }
    }

    /// `1{x < y} - vartheta`: the counterfactual CDF at `y`.
    pub fn cdf_at(y: T) -> Self {
        GTilde {
            shape: Shape::Step { base: Arc::new(|t| T::one() - t), jumps: Arc::new(move |_| vec![(y, -T::one())]) },
            slope: Slope::Constant(-T::one()),
        }
    }

    /// `1{x < vartheta} - tau`: the counterfactual `tau`-quantile.
    pub fn quantile(tau: T) -> Self {
        GTilde {
            shape: Shape::Step { base: Arc::new(move |_| T::one() - tau), jumps: Arc::new(|t| vec![(t, -T::one())]) },
            slope: Slope::GammaDensity,
        }
    }

    pub fn from_descriptor(d: &GTildeDescriptor) -> Self {
        match *d {
            GTildeDescriptor::Mean => Self::mean(),
            GTildeDescriptor::Cdf { y } => Self::cdf_at(T::lit(y)),
            GTildeDescriptor::Quantile { tau } => Self::quantile(T::lit(tau)),
        }
    }

    pub fn value(&self, x: T, vartheta: T) -> T {
        match &self.shape {
            Shape::Smooth { value, .. } => value(x, vartheta),
            Shape::Step { base, jumps } => {
                let mut v = base(vartheta);
                for (xj, sj) in jumps(vartheta) {
                    if xj <= x {
                        v = v + sj;
                    }
                }
                v
            }
        }
    }

    /// `int_{(y1, gamma]} nu(x, l) d_x g~(x, vartheta)`, negated when `gamma < y1`.
    pub fn stieltjes<N: Nuisance<T>>(&self, y1: T, gamma: T, l: &[T], vartheta: T, eta: &N, quad: &QuadratureConfig) -> Result<T> {
        match &self.shape {
            Shape::Smooth { d_x, .. } => integrate(|x| eta.nu(x, l) * d_x(x, vartheta), y1, gamma, quad),
            Shape::Step { jumps, .. } => {
                let (lo, hi, sign) = if gamma >= y1 { (y1, gamma, T::one()) } else { (gamma, y1, -T::one()) };
                let mut acc = T::zero();
                for (xj, sj) in jumps(vartheta) {
                    if xj > lo && xj <= hi {
                        acc = acc + eta.nu(xj, l) * sj;
                    }
                }
                Ok(sign * acc)
            }
        }
    }

    /// `-pi * d/dvartheta E[g~ | A = 1]` under `eta`.
    pub fn denominator<N: Nuisance<T>>(&self, vartheta: T, eta: &N) -> Result<T> {
        let slope = match self.slope {
            Slope::Constant(c) => c,
            Slope::GammaDensity => eta.density_gamma_treated(vartheta).ok_or(Error::MissingDensity)?,
        };
        Ok(-eta.pi() * slope)
    }
}

/// Influence function of the estimand defined by `spec`, with the
/// denominator `-pi * d/dvartheta E[g | A = 1]` supplied by the caller.
pub fn psi_general<T: Scalar, N: Nuisance<T>>(
    w: &Observation<'_, T>,
    spec: &GTilde<T>,
    vartheta: T,
    eta: &N,
    denom: T,
    quad: &QuadratureConfig,
) -> Result<T> {
    if denom == T::zero() || !denom.is_finite() {
        return Err(Error::ZeroDenominator);
    }
    let g = eta.gamma(w.y0, w.l);
    let num = if w.treated() {
        spec.value(g, vartheta)
    } else {
        -spec.stieltjes(w.y1, g, w.l, vartheta, eta, quad)?
    };
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuisance::FnNuisance;

    fn eta(gamma: f64, nu: f64, pi: f64) -> FnNuisance<f64> {
        FnNuisance::new(move |_, _| gamma, move |_, _| nu, pi)
    }

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn nu_integrals() {
        let two = eta(0.0, 2.0, 0.5);
        assert!((integrate_nu(1.0, 3.0, &[], &two, &quad()).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(integrate_nu(1.0, 1.0, &[], &two, &quad()).unwrap(), 0.0);
        let lin = FnNuisance::new(|_, _| 0.0, |x, _| x, 0.5);
        assert!((integrate_nu(0.0f64, 2.0, &[], &lin, &quad()).unwrap() - 2.0).abs() < 1e-12);
        assert!((integrate_nu(2.0f64, 0.0, &[], &lin, &quad()).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn att_arithmetic() {
        let w = Observation::new(0.0, 5.0, 1, &[]);
        assert!((psi_att(&w, 1.0, &eta(3.0, 1.0, 0.5), &quad()).unwrap() - 2.0).abs() < 1e-15);
        let w = Observation::new(0.0, 1.0, 0, &[]);
        assert!((psi_att(&w, 0.0, &eta(4.0, 1.0, 0.5), &quad()).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn compound_sign() {
        assert_eq!(chi(2.0, 1.0, 3.0), -1.0);
        assert_eq!(chi(4.0, 1.0, 3.0), 0.0);
        assert_eq!(chi(2.0, 3.0, 1.0), 1.0);
        assert_eq!(chi(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn cdt_arithmetic() {
        let w = Observation::new(0.0, 0.0, 1, &[]);
        assert!((psi_cdt(&w, 3.0, 0.4, &eta(2.0, 1.0, 0.5)) - 1.2).abs() < 1e-15);
        // Control with y1 = 1 < gamma = 4: chi(2) = -1, so -(1 / 0.5) * 1 * (-1) = 2.
        let w = Observation::new(0.0, 1.0, 0, &[]);
        assert_eq!(psi_cdt(&w, 2.0, 0.4, &eta(4.0, 1.0, 0.5)), 2.0);
        assert_eq!(psi_cdt(&w, 7.0, 0.4, &eta(4.0, 1.0, 0.5)), 0.0);
    }

    #[test]
    fn qtt_needs_densities_and_arithmetic() {
        let w = Observation::new(0.0, 2.0, 1, &[]);
        assert_eq!(psi_qtt(&w, 0.5, 1.0, 1.0, &eta(0.0, 1.0, 0.5)), Err(Error::MissingDensity));
        let mut e = eta(0.0, 1.0, 0.5);
        e.dens_y1_treated = Some(Arc::new(|_| 1.0));
        e.dens_gamma_treated = Some(Arc::new(|_| 1.0));
        assert!((psi_qtt(&w, 0.5, 1.0, 1.0, &e).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn step_integral_excludes_left_endpoint() {
        let g = GTilde::cdf_at(2.0);
        let e = eta(0.0, 3.0, 0.5);
        assert_eq!(g.stieltjes(2.0, 5.0, &[], 0.0, &e, &quad()).unwrap(), 0.0);
        assert_eq!(g.stieltjes(0.0, 2.0, &[], 0.0, &e, &quad()).unwrap(), -3.0);
        assert_eq!(g.stieltjes(5.0, 0.0, &[], 0.0, &e, &quad()).unwrap(), 3.0);
        assert_eq!(g.stieltjes(3.0, 5.0, &[], 0.0, &e, &quad()).unwrap(), 0.0);
    }

    #[test]
    fn zero_denominator() {
        let w = Observation::new(0.0, 0.0, 1, &[]);
        let r = psi_general(&w, &GTilde::mean(), 0.0, &eta(0.0, 1.0, 0.5), 0.0, &quad());
        assert_eq!(r, Err(Error::ZeroDenominator));
    }

    #[test]
    fn step_value_is_right_continuous() {
        let g = GTilde::<f64>::cdf_at(1.0);
        assert_eq!(g.value(0.999, 0.25), 0.75);
        assert_eq!(g.value(1.0, 0.25), -0.25);
    }
}
