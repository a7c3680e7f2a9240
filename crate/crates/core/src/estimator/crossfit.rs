use serde::{Deserialize, Serialize};

use crate::data::{validate, EstimandSpec, PanelDataset};
use crate::eif::{chi, psi_general, psi_qtt, GTilde, Shape, Slope};
use crate::error::{Error, Result};
use crate::estimator::median::{confidence_interval, median_adjust};
use crate::estimator::root::solve_quantile_root;
use crate::fold::{derive_seed, partition_folds, FoldAssignment};
use crate::nuisance::{fit_nuisances, select_tuning, Nuisance, NuisanceOptions, NuisanceSet};
use crate::quadrature::QuadratureConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossFitConfig {
    /// Number of folds `K`.
    pub folds: usize,
    /// Number of repetitions `S`.
    pub reps: usize,
    /// Folds `K'` for cross-validated bandwidth choice; rule of thumb when absent.
    pub cv_folds: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
    pub nuisance: NuisanceOptions,
    pub quad: QuadratureConfig,
    /// Split each treatment arm evenly across folds.
    pub stratify: bool,
    /// Minimum units of each arm in every training complement (stratified mode).
    pub min_stratum: usize,
}

impl Default for CrossFitConfig {
    fn default() -> Self {
        CrossFitConfig {
            folds: 5,
            reps: 1,
            cv_folds: None,
            alpha: 0.05,
            seed: 0,
            nuisance: NuisanceOptions::default(),
            quad: QuadratureConfig::default(),
            stratify: true,
            min_stratum: 10,
        }
    }
}

impl CrossFitConfig {
    pub fn check(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.reps < 1 {
            return Err(Error::InvalidParameter("need at least one repetition".into()));
        }
        if let Some(k) = self.cv_folds {
            if k < 2 {
                return Err(Error::InvalidParameter(format!("need at least 2 cross-validation folds, got {k}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        self.quad.check()?;
        self.nuisance.check()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepStat<T> {
    pub theta: T,
    pub sigma2: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport<T> {
    pub estimand: EstimandSpec,
    pub theta_hat: T,
    pub sigma2_hat: T,
    pub ci_lo: T,
    pub ci_hi: T,
    pub n: usize,
    pub folds: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub per_rep: Vec<RepStat<T>>,
}

/// Fits one nuisance set per fold on that fold's complement.
pub fn fit_fold_nuisances<T: Scalar>(
    data: &PanelDataset<T>,
    folds: &FoldAssignment,
    cfg: &CrossFitConfig,
    with_densities: bool,
    seed: u64,
) -> Result<Vec<NuisanceSet<T>>> {
    (0..folds.k())
        .map(|k| {
            let train = data.subset(&folds.complement(k));
            let opts = match cfg.cv_folds {
                Some(kp) => select_tuning(&train, &cfg.nuisance, kp, derive_seed(seed, 1000 + k as u64))?,
                None => cfg.nuisance.clone(),
            };
            fit_nuisances(&train, &opts, with_densities)
        })
        .collect()
}

/// Solves a moment linear in the target, `sum_i (c_i - w_i theta) = 0`, and
/// returns `(theta, mean of squared residuals)`.
fn solve_linear<T: Scalar>(terms: &[(T, T)]) -> Result<(T, T)> {
    let den: T = terms.iter().map(|t| t.1).sum();
    if !(den > T::zero()) {
        return Err(Error::NoTreatedInEvaluation);
    }
    let theta = terms.iter().map(|t| t.0).sum::<T>() / den;
    let ss: T = terms.iter().map(|&(c, w)| (c - w * theta) * (c - w * theta)).sum();
    Ok((theta, ss / T::from_usize_lossy(terms.len())))
}

/// One repetition of the ATT estimating equation under fold-specific nuisances.
///
/// The moment is linear in `theta` with slope `a_i / pi_k(i)`, so the root is
/// the ratio of `pi`-weighted sums; with equal fold shares it is the plain ratio.
pub fn solve_att_once<T: Scalar, N: Nuisance<T>>(
    data: &PanelDataset<T>,
    folds: &FoldAssignment,
    fitted: &[N],
    quad: &QuadratureConfig,
) -> Result<(T, T)> {
    let terms = data
        .observations()
        .enumerate()
        .map(|(i, o)| {
            let eta = &fitted[folds.fold_of(i)];
            let pi = eta.pi();
            let g = eta.gamma(o.y0, o.l);
            if o.treated() {
                Ok(((o.y1 - g) / pi, T::one() / pi))
            } else {
                Ok((eta.integrate_nu(o.y1, g, o.l, quad)? / pi, T::zero()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    solve_linear(&terms)
}

/// One repetition for the counterfactual CDF on the treated at `y`.
pub fn solve_cdt_once<T: Scalar, N: Nuisance<T>>(data: &PanelDataset<T>, y: T, folds: &FoldAssignment, fitted: &[N]) -> Result<(T, T)> {
    let terms: Vec<(T, T)> = data
        .observations()
        .enumerate()
        .map(|(i, o)| {
            let eta = &fitted[folds.fold_of(i)];
            let pi = eta.pi();
            let g = eta.gamma(o.y0, o.l);
            if o.treated() {
                (if g < y { T::one() / pi } else { T::zero() }, T::one() / pi)
            } else {
                (-eta.nu(y, o.l) * chi(y, o.y1, g) / pi, T::zero())
            }
        })
        .collect();
    solve_linear(&terms)
}

struct Unit<'a, T> {
    y1: T,
    g: T,
    a: bool,
    l: &'a [T],
    inv_pi: T,
    fold: usize,
}

fn units<'a, T: Scalar, N: Nuisance<T>>(data: &'a PanelDataset<T>, folds: &FoldAssignment, fitted: &[N]) -> Vec<Unit<'a, T>> {
    data.observations()
        .enumerate()
        .map(|(i, o)| {
            let k = folds.fold_of(i);
            Unit { y1: o.y1, g: fitted[k].gamma(o.y0, o.l), a: o.treated(), l: o.l, inv_pi: T::one() / fitted[k].pi(), fold: k }
        })
        .collect()
}

fn span<T: Scalar>(us: &[Unit<'_, T>]) -> (T, T) {
    us.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), u| (lo.min(u.y1).min(u.g), hi.max(u.y1).max(u.g)))
}

/// One repetition for the quantile effect on the treated at level `tau`.
/// Returns `(theta, sigma2)` for `theta = vartheta1 - vartheta2`.
pub fn solve_qtt_once<T: Scalar, N: Nuisance<T>>(data: &PanelDataset<T>, tau: T, folds: &FoldAssignment, fitted: &[N]) -> Result<(T, T)> {
    let us = units(data, folds, fitted);
    if !us.iter().any(|u| u.a) {
        return Err(Error::NoTreatedInEvaluation);
    }
    let (lo, hi) = span(&us);
    let bracket = (lo - T::one(), hi + T::one());
    let treated_y1: Vec<T> = us.iter().filter(|u| u.a).map(|u| u.y1).collect();
    let theta1 = solve_quantile_root(
        |t| us.iter().filter(|u| u.a).map(|u| u.inv_pi * (if u.y1 <= t { T::one() } else { T::zero() } - tau)).sum(),
        bracket,
        &treated_y1,
    )?;
    let knots: Vec<T> = us.iter().flat_map(|u| [u.g, u.y1]).collect();
    let theta2 = solve_quantile_root(
        |t| {
            us.iter()
                .map(|u| {
                    if u.a {
                        u.inv_pi * (if u.g < t { T::one() } else { T::zero() } - tau)
                    } else {
                        let c = chi(t, u.y1, u.g);
                        if c == T::zero() {
                            T::zero()
                        } else {
                            -u.inv_pi * fitted[u.fold].nu(t, u.l) * c
                        }
                    }
                })
                .sum()
        },
        bracket,
        &knots,
    )?;
    let mut ss = T::zero();
    for (i, o) in data.observations().enumerate() {
        let psi = psi_qtt(&o, tau, theta1, theta2, &fitted[folds.fold_of(i)])?;
        ss = ss + psi * psi;
    }
    Ok((theta1 - theta2, ss / T::from_usize_lossy(data.len())))
}

/// One repetition for a general moment-defined counterfactual functional.
///
/// The root of `sum_i [a_i g~(gamma_i, t) - (1 - a_i) S_i(t)] / pi_k(i)` is
/// located by bracketing and bisection, oriented by the sign of the moment's
/// slope in `t`.
pub fn solve_general_once<T: Scalar, N: Nuisance<T>>(
    data: &PanelDataset<T>,
    gtilde: &GTilde<T>,
    folds: &FoldAssignment,
    fitted: &[N],
    quad: &QuadratureConfig,
) -> Result<(T, T)> {
    let us = units(data, folds, fitted);
    if !us.iter().any(|u| u.a) {
        return Err(Error::NoTreatedInEvaluation);
    }
    let orient = match gtilde.slope {
        Slope::Constant(c) if c < T::zero() => -T::one(),
        Slope::Constant(c) if c == T::zero() => return Err(Error::ZeroDenominator),
        _ => T::one(),
    };
    let mut failure = None;
    let mut moment = |t: T| -> T {
        let mut acc = T::zero();
        for u in &us {
            let term = if u.a {
                gtilde.value(u.g, t)
            } else {
                match gtilde.stieltjes(u.y1, u.g, u.l, t, &fitted[u.fold], quad) {
                    Ok(v) => -v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        T::zero()
                    }
                }
            };
            acc = acc + term * u.inv_pi;
        }
        orient * acc
    };
    let (lo0, hi0) = span(&us);
    let (mut lo, mut hi) = (lo0.min(-T::one()) - T::one(), hi0.max(T::lit(2.0)) + T::one());
    let mut tries = 0;
    while !(moment(lo) < T::zero() && moment(hi) >= T::zero()) {
        tries += 1;
        if tries > 40 {
            return Err(Error::NoBracket { lo: lo.as_f64(), hi: hi.as_f64() });
        }
        let w = hi - lo;
        lo = lo - w;
        hi = hi + w;
    }
    let knots: Vec<T> = match gtilde.shape {
        Shape::Step { .. } => us.iter().flat_map(|u| [u.g, u.y1]).collect(),
        Shape::Smooth { .. } => Vec::new(),
    };
    let theta = solve_quantile_root(&mut moment, (lo, hi), &knots)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut ss = T::zero();
    for (i, o) in data.observations().enumerate() {
        let eta = &fitted[folds.fold_of(i)];
        let psi = psi_general(&o, gtilde, theta, eta, gtilde.denominator(theta, eta)?, quad)?;
        ss = ss + psi * psi;
    }
    Ok((theta, ss / T::from_usize_lossy(data.len())))
}

/// Repeated cross-fitting, median adjustment and a Wald interval.
pub fn estimate<T: Scalar>(data: &PanelDataset<T>, spec: &EstimandSpec, cfg: &CrossFitConfig) -> Result<EstimateReport<T>> {
    validate(data)?;
    spec.check()?;
    cfg.check()?;
    let needs_densities = matches!(spec, EstimandSpec::Qtt { .. })
        || matches!(spec, EstimandSpec::General { gtilde } if GTilde::<T>::from_descriptor(gtilde).slope == Slope::GammaDensity);
    let mut per_rep = Vec::with_capacity(cfg.reps);
    for s in 0..cfg.reps {
        let seed = derive_seed(cfg.seed, s as u64);
        let folds = partition_folds(data.len(), cfg.folds, cfg.stratify.then_some(data.a()), seed)?;
        if cfg.stratify {
            folds.check_min_stratum(data.a(), cfg.min_stratum)?;
        }
        let fitted = fit_fold_nuisances(data, &folds, cfg, needs_densities, seed)?;
        let (theta, sigma2) = match spec {
            EstimandSpec::Att => solve_att_once(data, &folds, &fitted, &cfg.quad)?,
            EstimandSpec::Cdt { y } => solve_cdt_once(data, T::lit(*y), &folds, &fitted)?,
            EstimandSpec::Qtt { tau } => solve_qtt_once(data, T::lit(*tau), &folds, &fitted)?,
            EstimandSpec::General { gtilde } => {
                solve_general_once(data, &GTilde::from_descriptor(gtilde), &folds, &fitted, &cfg.quad)?
            }
        };
        per_rep.push(RepStat { theta, sigma2 });
    }
    let pairs: Vec<(T, T)> = per_rep.iter().map(|r| (r.theta, r.sigma2)).collect();
    let (theta_hat, sigma2_hat) = median_adjust(&pairs);
    let (ci_lo, ci_hi) = confidence_interval(theta_hat, sigma2_hat, data.len(), cfg.alpha);
    Ok(EstimateReport {
        estimand: spec.clone(),
        theta_hat,
        sigma2_hat,
        ci_lo,
        ci_hi,
        n: data.len(),
        folds: cfg.folds,
        reps: cfg.reps,
        alpha: cfg.alpha,
        seed: cfg.seed,
        per_rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuisance::FnNuisance;

    fn two_folds(n: usize) -> FoldAssignment {
        FoldAssignment::from_labels((0..n).map(|i| i % 2).collect(), 2).unwrap()
    }

    #[test]
    fn all_treated_identity_transport() {
        let d = PanelDataset::from_parts_unchecked(vec![1.0, 2.0, 4.0], vec![2.0, 5.0, 4.5], vec![1, 1, 1], vec![], 0);
        let eta = FnNuisance::new(|y, _| y, |_, _| 1.0, 0.5);
        let f = FoldAssignment::from_labels(vec![0, 1, 0], 2).unwrap();
        let (theta, _) = solve_att_once(&d, &f, &[&eta, &eta], &QuadratureConfig::default()).unwrap();
        assert!((theta - 1.5f64).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_equation() {
        // Treated gaps 2 and 3; control integrals +2 and -2 (nu = 1 over
        // intervals of length 2 with opposite orientation).
        let d = PanelDataset::from_parts_unchecked(
            vec![3.0, 4.0, 10.0, 20.0],
            vec![5.0, 7.0, 8.0, 22.0],
            vec![1, 1, 0, 0],
            vec![],
            0,
        );
        let gamma = |y0: f64, _: &[f64]| y0;
        let eta = FnNuisance::new(gamma, |_, _| 1.0, 0.5);
        let (theta, sigma2) = solve_att_once(&d, &two_folds(4), &[&eta, &eta], &QuadratureConfig::default()).unwrap();
        assert!((theta - 2.5).abs() < 1e-12);
        // Residuals (2 - 2.5) / 0.5, (3 - 2.5) / 0.5, 2 / 0.5, -2 / 0.5.
        assert!((sigma2 - (1.0 + 1.0 + 16.0 + 16.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_treated() {
        let d = PanelDataset::from_parts_unchecked(vec![0.0, 1.0], vec![0.0, 1.0], vec![0, 0], vec![], 0);
        let eta = FnNuisance::new(|y, _| y, |_, _| 1.0, 0.5);
        let r = solve_att_once(&d, &two_folds(2), &[&eta, &eta], &QuadratureConfig::default());
        assert_eq!(r, Err(Error::NoTreatedInEvaluation));
    }

    #[test]
    fn squared_residual_mean() {
        assert_eq!(solve_linear(&[(1.0, 0.0), (-1.0, 0.0), (1.0, 1.0), (-1.0, 1.0)]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn config_checks() {
        assert!(CrossFitConfig::default().check().is_ok());
        assert!(CrossFitConfig { folds: 1, ..Default::default() }.check().is_err());
        assert!(CrossFitConfig { reps: 0, ..Default::default() }.check().is_err());
        assert!(CrossFitConfig { alpha: 1.0, ..Default::default() }.check().is_err());
        assert!(CrossFitConfig { cv_folds: Some(1), ..Default::default() }.check().is_err());
    }
}
