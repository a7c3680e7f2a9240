//! Direct plug-ins of the identification formulas: no cross-fitting, no inference.

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::nuisance::{fit_gamma, NuisanceOptions};
use crate::scalar::Scalar;

fn require_arms<T: Scalar>(data: &PanelDataset<T>) -> Result<()> {
    let (t, c) = (data.n_treated(), data.n_control());
    if t == 0 || c == 0 {
        return Err(Error::DegenerateArm { treated: t, control: c });
    }
    Ok(())
}

/// Imputed counterfactuals `gamma(y0, l)` of the treated units, in data order,
/// with the transport map fitted on all controls.
pub fn plugin_counterfactuals<T: Scalar>(data: &PanelDataset<T>, opts: &NuisanceOptions) -> Result<Vec<T>> {
    require_arms(data)?;
    let gamma = fit_gamma(data, opts)?;
    Ok(data.observations().filter(|o| o.treated()).map(|o| gamma.eval(o.y0, o.l)).collect())
}

pub fn plugin_att<T: Scalar>(data: &PanelDataset<T>, opts: &NuisanceOptions) -> Result<T> {
    let cf = plugin_counterfactuals(data, opts)?;
    let y1: T = data.observations().filter(|o| o.treated()).map(|o| o.y1).sum();
    let g: T = cf.iter().copied().sum();
    Ok((y1 - g) / T::from_usize_lossy(cf.len()))
}

/// Share of treated counterfactuals strictly below `y`.
pub fn plugin_cdt<T: Scalar>(data: &PanelDataset<T>, y: T, opts: &NuisanceOptions) -> Result<T> {
    let cf = plugin_counterfactuals(data, opts)?;
    Ok(cdt_from(&cf, y))
}

/// The plug-in counterfactual CDF on a grid, from a single fit.
pub fn plugin_cdt_curve<T: Scalar>(data: &PanelDataset<T>, ys: &[T], opts: &NuisanceOptions) -> Result<Vec<T>> {
    let cf = plugin_counterfactuals(data, opts)?;
    Ok(ys.iter().map(|&y| cdt_from(&cf, y)).collect())
}

fn cdt_from<T: Scalar>(cf: &[T], y: T) -> T {
    T::from_usize_lossy(cf.iter().filter(|&&g| g < y).count()) / T::from_usize_lossy(cf.len())
}

/// `tau`-quantile of treated `Y1` minus the generalized inverse of the plug-in
/// counterfactual CDF.
pub fn plugin_qtt<T: Scalar>(data: &PanelDataset<T>, tau: T, opts: &NuisanceOptions) -> Result<T> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
    }
    let cf = plugin_counterfactuals(data, opts)?;
    let y1: Vec<T> = data.observations().filter(|o| o.treated()).map(|o| o.y1).collect();
    Ok(empirical_quantile(&y1, tau) - empirical_quantile(&cf, tau))
}

/// `inf{x : #{x_i <= x} / n >= tau}`, which equals the infimum of
/// `{x : #{x_i < x} / n >= tau}` as well.
pub(crate) fn empirical_quantile<T: Scalar>(xs: &[T], tau: T) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    let nn = T::from_usize_lossy(n);
    let k = (tau * nn - T::lit(8.0) * T::epsilon() * nn).ceil().to_usize().unwrap_or(1).clamp(1, n);
    v[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Controls with `y1 = y0 + c`; treated units whose baselines are control
    /// sample points and whose outcomes grow by `d`.
    fn shifted(c: f64, d: f64) -> PanelDataset<f64> {
        let ctrl: Vec<f64> = (0..30).map(|i| (i * 7 % 30) as f64 / 3.0).collect();
        let treated: Vec<f64> = (0..10).map(|i| ctrl[3 * i]).collect();
        let y0: Vec<f64> = ctrl.iter().chain(&treated).copied().collect();
        let y1: Vec<f64> = ctrl.iter().map(|y| y + c).chain(treated.iter().map(|y| y + d)).collect();
        let a: Vec<u8> = (0..40).map(|i| u8::from(i >= 30)).collect();
        PanelDataset::without_covariates(y0, y1, a).unwrap()
    }

    #[test]
    fn shift_algebra() {
        let att = plugin_att(&shifted(1.5, 4.0), &NuisanceOptions::default()).unwrap();
        assert!((att - 2.5).abs() < 1e-12, "{att}");
    }

    #[test]
    fn cdt_bounds_and_monotone() {
        let d = shifted(1.0, 2.0);
        let o = NuisanceOptions::default();
        assert_eq!(plugin_cdt(&d, -100.0, &o).unwrap(), 0.0);
        assert_eq!(plugin_cdt(&d, 100.0, &o).unwrap(), 1.0);
        let grid: Vec<f64> = (0..60).map(|i| i as f64 / 4.0 - 2.0).collect();
        let curve = plugin_cdt_curve(&d, &grid, &o).unwrap();
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_treated_arm() {
        let d = PanelDataset::from_parts_unchecked(vec![0.0, 1.0], vec![0.0, 1.0], vec![0, 0], vec![], 0);
        assert!(matches!(plugin_att(&d, &NuisanceOptions::default()), Err(Error::DegenerateArm { .. })));
    }

    #[test]
    fn quantile_convention() {
        assert_eq!(empirical_quantile(&[4.0, 1.0, 3.0, 2.0], 0.5), 2.0);
        assert_eq!(empirical_quantile(&[4.0, 1.0, 3.0, 2.0], 0.75), 3.0);
        assert_eq!(empirical_quantile(&[4.0, 1.0, 3.0, 2.0], 0.76), 4.0);
    }
}
