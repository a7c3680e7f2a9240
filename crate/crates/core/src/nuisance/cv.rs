//! Cross-validated choice of the smoothing scale.
//!
//! Each candidate multiplies the rule-of-thumb bandwidths. The conditional
//! CDFs are scored by integrated squared error of `1{Y <= y}` over a grid of
//! sample quantiles, the odds regression by held-out log-loss of `A`.

use crate::data::PanelDataset;
use crate::error::Result;
use crate::fold::{derive_seed, partition_folds};
use crate::kernel::Bandwidth;
use crate::nuisance::cdf::fit_cond_cdf;
use crate::nuisance::nu::fit_nu_from;
use crate::nuisance::{fit_gamma, NuisanceOptions};
use crate::scalar::Scalar;

/// Candidate multiples of the rule-of-thumb bandwidth.
pub const ZETA_LADDER: [f64; 5] = [0.5, 0.75, 1.0, 1.5, 2.0];

const LOSS_POINTS: usize = 16;

/// Returns `opts` with every `Auto` bandwidth replaced by the best
/// `Scaled(zeta)` under `k_prime`-fold cross-validation on `train`.
/// Explicit bandwidths are left untouched.
pub fn select_tuning<T: Scalar>(train: &PanelDataset<T>, opts: &NuisanceOptions, k_prime: usize, seed: u64) -> Result<NuisanceOptions> {
    let mut out = opts.clone();
    if train.p() > 0 && opts.bandwidth == Bandwidth::Auto {
        let controls = train.subset(&train.arm_indices(0));
        let losses = ZETA_LADDER
            .iter()
            .map(|&z| {
                let a = cdf_loss(controls.y0(), controls.l(), controls.p(), opts, z, k_prime, derive_seed(seed, 1))?;
                let b = cdf_loss(controls.y1(), controls.l(), controls.p(), opts, z, k_prime, derive_seed(seed, 2))?;
                Ok(a + b)
            })
            .collect::<Result<Vec<T>>>()?;
        out.bandwidth = Bandwidth::Scaled(ZETA_LADDER[argmin(&losses)]);
    }
    if opts.nu_bandwidth == Bandwidth::Auto && opts.nu_learner == crate::nuisance::NuLearner::Kernel {
        let gamma = fit_gamma(train, &out)?;
        let x: Vec<T> = train.observations().map(|o| gamma.eval(o.y0, o.l)).collect();
        let folds = partition_folds(train.len(), k_prime, Some(train.a()), derive_seed(seed, 3))?;
        let p = train.p();
        let mut losses = Vec::with_capacity(ZETA_LADDER.len());
        for &z in &ZETA_LADDER {
            let mut loss = T::zero();
            for k in 0..folds.k() {
                let (fit_idx, held) = (folds.complement(k), folds.fold(k));
                let xs: Vec<T> = fit_idx.iter().map(|&i| x[i]).collect();
                let ls: Vec<T> = fit_idx.iter().flat_map(|&i| train.covariates(i).iter().copied()).collect();
                let a: Vec<u8> = fit_idx.iter().map(|&i| train.a()[i]).collect();
                let mut nu_opts = out.nu_options();
                nu_opts.bandwidth = Bandwidth::Scaled(z);
                let nu = fit_nu_from(&xs, &ls, p, &a, &nu_opts)?;
                for &i in &held {
                    let pr = nu.propensity(x[i], train.covariates(i));
                    loss = loss - if train.a()[i] == 1 { pr.ln() } else { (T::one() - pr).ln() };
                }
            }
            losses.push(loss);
        }
        out.nu_bandwidth = Bandwidth::Scaled(ZETA_LADDER[argmin(&losses)]);
    }
    Ok(out)
}

fn argmin<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn cdf_loss<T: Scalar>(ys: &[T], ls: &[T], p: usize, opts: &NuisanceOptions, zeta: f64, k_prime: usize, seed: u64) -> Result<T> {
    let n = ys.len();
    let folds = partition_folds(n, k_prime.min(n), None, seed)?;
    let mut sorted = ys.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite outcomes"));
    let points: Vec<T> = (0..LOSS_POINTS).map(|j| sorted[((2 * j + 1) * n) / (2 * LOSS_POINTS)]).collect();
    let mut loss = T::zero();
    let mut w = Vec::new();
    for k in 0..folds.k() {
        let (fit_idx, held) = (folds.complement(k), folds.fold(k));
        let fy: Vec<T> = fit_idx.iter().map(|&i| ys[i]).collect();
        let fl: Vec<T> = fit_idx.iter().flat_map(|&i| ls[i * p..(i + 1) * p].iter().copied()).collect();
        let cdf = fit_cond_cdf(&fy, &fl, p, opts.kernel, &Bandwidth::Scaled(zeta))?;
        for &i in &held {
            cdf.weights(&ls[i * p..(i + 1) * p], &mut w);
            for &y in &points {
                let ind = if ys[i] <= y { T::one() } else { T::zero() };
                let e = cdf.eval_weighted(y, &w) - ind;
                loss = loss + e * e;
            }
        }
    }
    Ok(loss)
}
