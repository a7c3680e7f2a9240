//! Numerical checks of the theory: orthogonality of the ATT moment, its
//! second-order remainder, interval coverage and nuisance convergence.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{EstimandSpec, PanelDataset};
use crate::dgp::{gen_stm, true_nuisances, StmConfig};
use crate::eif::psi_att;
use crate::error::{Error, Result};
use crate::estimator::{estimate, CrossFitConfig};
use crate::fold::derive_seed;
use crate::kernel::Bandwidth;
use crate::nuisance::{fit_gamma, fit_nu, MapFn, Nuisance, NuisanceOptions};
use crate::quadrature::{integrate, QuadratureConfig};

/// Direction `eta~ - eta` of a nuisance perturbation.
#[derive(Clone)]
pub struct Perturbation {
    pub d_gamma: MapFn<f64>,
    /// `d_gamma` is relative: the map moves by `gamma(y, l) * d_gamma(y, l)`,
    /// which keeps positive transports positive.
    pub gamma_relative: bool,
    pub d_nu: MapFn<f64>,
    /// `d_nu` is relative: the odds move by `nu(x, l) * d_nu(x, l)`.
    pub nu_relative: bool,
    pub d_pi: f64,
}

impl std::fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Perturbation")
            .field("gamma_relative", &self.gamma_relative)
            .field("nu_relative", &self.nu_relative).field("d_pi", &self.d_pi).finish_non_exhaustive()
    }
}

impl Perturbation {
    pub fn zero() -> Self {
        Self::constant(0.0, 0.0, 0.0)
    }

    pub fn constant(d_gamma: f64, d_nu: f64, d_pi: f64) -> Self {
        Perturbation {
            d_gamma: Arc::new(move |_, _| d_gamma),
            gamma_relative: false,
            d_nu: Arc::new(move |_, _| d_nu),
            nu_relative: false,
            d_pi,
        }
    }

    /// Smooth random direction with `|d_gamma| <= 1`, relative odds change at
    /// most one half and `|d_pi| <= 0.05`.
    pub fn random_bounded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
        let (g0, g1, wg, pg, gl) = (u(-0.3, 0.3), u(-0.4, 0.4), u(0.5, 2.0), u(0.0, std::f64::consts::TAU), u(-0.3, 0.3));
        let (n1, wn, pn, nl) = (u(-0.3, 0.3), u(0.5, 2.0), u(0.0, std::f64::consts::TAU), u(-0.2, 0.2));
        let d_pi = u(-0.05, 0.05);
        Perturbation {
            d_gamma: Arc::new(move |y, l| g0 + g1 * (wg * y + pg).sin() + gl * l.iter().sum::<f64>().tanh()),
            gamma_relative: false,
            d_nu: Arc::new(move |x, l| n1 * (wn * x + pn).sin() + nl * l.iter().sum::<f64>().tanh()),
            nu_relative: true,
            d_pi,
        }
    }

    /// Reads the `gamma` direction as a relative change.
    pub fn with_relative_gamma(&self) -> Self {
        Perturbation { gamma_relative: true, ..self.clone() }
    }

    /// Multiplies the `gamma` direction by `k`.
    pub fn scale_gamma(&self, k: f64) -> Self {
        let g = self.d_gamma.clone();
        Perturbation { d_gamma: Arc::new(move |y, l| k * g(y, l)), ..self.clone() }
    }

    fn delta_gamma<N: Nuisance<f64>>(&self, base: &N, y: f64, l: &[f64]) -> f64 {
        let d = (self.d_gamma)(y, l);
        if self.gamma_relative {
            base.gamma(y, l) * d
        } else {
            d
        }
    }

    fn delta_nu<N: Nuisance<f64>>(&self, base: &N, x: f64, l: &[f64]) -> f64 {
        let d = (self.d_nu)(x, l);
        if self.nu_relative {
            base.nu(x, l) * d
        } else {
            d
        }
    }
}

/// `eta + lambda (eta~ - eta)`.
pub struct PerturbedNuisance<'a, N> {
    pub base: &'a N,
    pub pert: &'a Perturbation,
    pub lambda: f64,
}

impl<N: Nuisance<f64>> Nuisance<f64> for PerturbedNuisance<'_, N> {
    fn gamma(&self, y: f64, l: &[f64]) -> f64 {
        self.base.gamma(y, l) + self.lambda * self.pert.delta_gamma(self.base, y, l)
    }
    fn nu(&self, x: f64, l: &[f64]) -> f64 {
        self.base.nu(x, l) + self.lambda * self.pert.delta_nu(self.base, x, l)
    }
    fn pi(&self) -> f64 {
        self.base.pi() + self.lambda * self.pert.d_pi
    }
}

/// `base` with its odds replaced by `nu`.
pub struct ReplaceNu<N> {
    pub base: N,
    pub nu: MapFn<f64>,
}

impl<N: Nuisance<f64>> Nuisance<f64> for ReplaceNu<N> {
    fn gamma(&self, y: f64, l: &[f64]) -> f64 {
        self.base.gamma(y, l)
    }
    fn nu(&self, x: f64, l: &[f64]) -> f64 {
        (self.nu)(x, l)
    }
    fn pi(&self) -> f64 {
        self.base.pi()
    }
}

/// Quadrature used by the checks: fixed nodes, so every integral is smooth in
/// its endpoints and finite differences in `lambda` are not polluted by
/// adaptive refinement.
pub fn validation_quadrature() -> QuadratureConfig {
    QuadratureConfig::gauss_legendre(24)
}

fn check_pi(base_pi: f64, pert: &Perturbation, lambda: f64) -> Result<()> {
    let p = base_pi + lambda * pert.d_pi;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("perturbed treated share {p} leaves (0, 1)")));
    }
    Ok(())
}

/// `psi(W_i; theta, eta_lambda)` for every unit.
pub fn psi_values<N: Nuisance<f64>>(
    data: &PanelDataset<f64>,
    base: &N,
    theta: f64,
    pert: &Perturbation,
    lambda: f64,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_pi(base.pi(), pert, lambda)?;
    let eta = PerturbedNuisance { base, pert, lambda };
    data.observations().map(|o| psi_att(&o, theta, &eta, quad)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0);
    (m, (var / v.len() as f64).sqrt())
}

/// Monte Carlo `Phi(lambda) = E psi(W; theta, eta_lambda)` at the true
/// nuisances and ATT, over `mc_size` fresh draws.
pub fn phi_at(lambda: f64, dgp: &StmConfig, pert: &Perturbation, mc_size: usize, seed: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let (data, truth) = gen_stm(&StmConfig { n: mc_size, seed, ..dgp.clone() })?;
    let base = true_nuisances(dgp);
    Ok(mean(&psi_values(&data, &base, truth.att_true, pert, lambda, &validation_quadrature())?))
}

/// Closed-form `Phi''(lambda)` of the ATT moment on a sample:
/// `E[S''] / pi_l - 2 d_pi E[S'] / pi_l^2 + 2 d_pi^2 E[S] / pi_l^3`, where
/// `psi = S / pi_l` and for controls
/// `S'' = 2 d_gamma d_nu(gamma_l) + d_gamma^2 d/dx nu_l(gamma_l)`.
pub fn second_order_bias<N: Nuisance<f64>>(
    data: &PanelDataset<f64>,
    base: &N,
    theta: f64,
    pert: &Perturbation,
    lambda: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_pi(base.pi(), pert, lambda)?;
    let eta = PerturbedNuisance { base, pert, lambda };
    let pi_l = eta.pi();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for o in data.observations() {
        let dg = pert.delta_gamma(base, o.y0, o.l);
        let g = eta.gamma(o.y0, o.l);
        if o.treated() {
            s0 += o.y1 - g - theta;
            s1 -= dg;
        } else {
            s0 += integrate(|x| eta.nu(x, o.l), o.y1, g, quad)?;
            s1 += dg * eta.nu(g, o.l) + integrate(|x| pert.delta_nu(base, x, o.l), o.y1, g, quad)?;
            let h = 1e-4 * g.abs().max(1.0);
            let dnu = (eta.nu(g + h, o.l) - eta.nu(g - h, o.l)) / (2.0 * h);
            s2 += 2.0 * dg * pert.delta_nu(base, g, o.l) + dg * dg * dnu;
        }
    }
    let n = data.len() as f64;
    let (s0, s1, s2) = (s0 / n, s1 / n, s2 / n);
    let dp = pert.d_pi;
    Ok(s2 / pi_l - 2.0 * dp * s1 / (pi_l * pi_l) + 2.0 * dp * dp * s0 / (pi_l * pi_l * pi_l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    /// `Phi(0)` and its Monte Carlo standard error.
    pub phi0: f64,
    pub phi0_se: f64,
    /// One-sided, Richardson-refined `Phi'(0)` and its standard error.
    pub phi_prime_0: f64,
    pub phi_prime_se: f64,
    /// Central-difference `Phi''(1/2)`, Richardson-refined.
    pub phi_second_mid: f64,
    /// Closed-form `Phi''(1/2)` on the same draws.
    pub phi_second_closed: f64,
    pub h: f64,
    pub mc_size: usize,
}

/// Finite-difference orthogonality check on a fixed sample (common random
/// numbers across `lambda`).
pub fn orthogonality_check_on<N: Nuisance<f64>>(
    data: &PanelDataset<f64>,
    base: &N,
    theta: f64,
    pert: &Perturbation,
    h: f64,
) -> Result<OrthogonalityReport> {
    if !(h > 0.0 && 2.0 * h < 0.5) {
        return Err(Error::InvalidParameter(format!("step must lie in (0, 0.25), got {h}")));
    }
    let quad = validation_quadrature();
    let at = |lambda: f64| psi_values(data, base, theta, pert, lambda, &quad);
    let (p0, ph2, ph, p2h) = (at(0.0)?, at(h / 2.0)?, at(h)?, at(2.0 * h)?);
    // Forward second-order stencils at steps h and h/2, then Richardson.
    let d: Vec<f64> = (0..data.len())
        .map(|i| {
            let coarse = (-3.0 * p0[i] + 4.0 * ph[i] - p2h[i]) / (2.0 * h);
            let fine = (-3.0 * p0[i] + 4.0 * ph2[i] - ph[i]) / h;
            (4.0 * fine - coarse) / 3.0
        })
        .collect();
    let (phi0, phi0_se) = mean_se(&p0);
    let (phi_prime_0, phi_prime_se) = mean_se(&d);
    let phi = |lambda: f64| -> Result<f64> { Ok(mean(&at(lambda)?)) };
    let mid = phi(0.5)?;
    let central = |s: f64| -> Result<f64> { Ok((phi(0.5 + s)? - 2.0 * mid + phi(0.5 - s)?) / (s * s)) };
    let (c_h, c_h2) = (central(h)?, central(h / 2.0)?);
    let phi_second_mid = (4.0 * c_h2 - c_h) / 3.0;
    let phi_second_closed = second_order_bias(data, base, theta, pert, 0.5, &quad)?;
    Ok(OrthogonalityReport {
        phi0,
        phi0_se,
        phi_prime_0,
        phi_prime_se,
        phi_second_mid,
        phi_second_closed,
        h,
        mc_size: data.len(),
    })
}

/// [`orthogonality_check_on`] at the true nuisances of `dgp` over `mc_size` draws.
pub fn orthogonality_check(dgp: &StmConfig, pert: &Perturbation, h: f64, mc_size: usize, seed: u64) -> Result<OrthogonalityReport> {
    let (data, truth) = gen_stm(&StmConfig { n: mc_size, seed, ..dgp.clone() })?;
    orthogonality_check_on(&data, &true_nuisances(dgp), truth.att_true, pert, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    pub rep: usize,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n_reps: usize,
    pub covered: usize,
    pub cover_rate: f64,
    pub mean_ci_width: f64,
    pub rmse: f64,
    pub mean_bias: f64,
    /// Standard error of `mean_bias`.
    pub bias_se: f64,
    pub att_true: f64,
    pub rows: Vec<CoverageRow>,
}

/// Runs the cross-fitted ATT estimator on `n_reps` independently seeded datasets.
pub fn coverage_study(dgp: &StmConfig, cfg: &CrossFitConfig, n_reps: usize, master_seed: u64) -> Result<CoverageReport> {
    if n_reps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replications, got {n_reps}")));
    }
    let mut rows = Vec::with_capacity(n_reps);
    let mut att_true = 0.0;
    for rep in 0..n_reps {
        let (data, truth) = gen_stm(&StmConfig { seed: derive_seed(master_seed, 2 * rep as u64), ..dgp.clone() })?;
        att_true = truth.att_true;
        let run = CrossFitConfig { seed: derive_seed(master_seed, 2 * rep as u64 + 1), ..cfg.clone() };
        let r = estimate(&data, &EstimandSpec::Att, &run)?;
        rows.push(CoverageRow {
            rep,
            theta_hat: r.theta_hat,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
            covered: r.ci_lo <= truth.att_true && truth.att_true <= r.ci_hi,
        });
    }
    let covered = rows.iter().filter(|r| r.covered).count();
    let errs: Vec<f64> = rows.iter().map(|r| r.theta_hat - att_true).collect();
    let (mean_bias, bias_se) = mean_se(&errs);
    Ok(CoverageReport {
        n_reps,
        covered,
        cover_rate: covered as f64 / n_reps as f64,
        mean_ci_width: mean(&rows.iter().map(|r| r.ci_hi - r.ci_lo).collect::<Vec<_>>()),
        rmse: mean(&errs.iter().map(|e| e * e).collect::<Vec<_>>()).sqrt(),
        mean_bias,
        bias_se,
        att_true,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub bandwidth_scale: f64,
    pub gamma_l2: f64,
    pub nu_l2: f64,
}

/// Evaluation draws used by [`rate_probe`].
pub const RATE_EVAL_SIZE: usize = 2000;
/// Independent training samples averaged per row of [`rate_probe`].
pub const RATE_REPS: usize = 4;

/// `L2(P)` errors of the fitted transport map and odds against the truth,
/// for every sample size in `ns` and bandwidth multiple in `scales`, with
/// squared errors averaged over [`RATE_REPS`] training samples. The odds are
/// compared at the true transported outcome.
pub fn rate_probe(dgp: &StmConfig, ns: &[usize], scales: &[f64], seed: u64) -> Result<Vec<RateRow>> {
    let (eval, _) = gen_stm(&StmConfig { n: RATE_EVAL_SIZE, seed: derive_seed(seed, u64::MAX), ..dgp.clone() })?;
    let truth = true_nuisances(dgp);
    let targets: Vec<(f64, f64)> = eval
        .observations()
        .map(|o| {
            let g = truth.gamma(o.y0, o.l);
            (g, truth.nu(g, o.l))
        })
        .collect();
    let mut rows = Vec::new();
    for (j, &n) in ns.iter().enumerate() {
        let trains = (0..RATE_REPS)
            .map(|r| gen_stm(&StmConfig { n, seed: derive_seed(seed, (j * RATE_REPS + r) as u64), ..dgp.clone() }).map(|t| t.0))
            .collect::<Result<Vec<_>>>()?;
        for &s in scales {
            let opts = NuisanceOptions { bandwidth: Bandwidth::Scaled(s), nu_bandwidth: Bandwidth::Scaled(s), ..Default::default() };
            let (mut ge, mut ne) = (0.0, 0.0);
            for train in &trains {
                let gamma = fit_gamma(train, &opts)?;
                let nu = fit_nu(train, &gamma, &opts.nu_options())?;
                for (o, &(g, v)) in eval.observations().zip(&targets) {
                    ge += (gamma.eval(o.y0, o.l) - g).powi(2);
                    ne += (nu.eval(g, o.l) - v).powi(2);
                }
            }
            let m = (eval.len() * RATE_REPS) as f64;
            rows.push(RateRow { n, bandwidth_scale: s, gamma_l2: (ge / m).sqrt(), nu_l2: (ne / m).sqrt() });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_perturbation_is_flat() {
        let r = orthogonality_check(&StmConfig::did(0, 1.0, 2.0, 0.4, 0), &Perturbation::zero(), 0.05, 500, 3).unwrap();
        assert!(r.phi_prime_0.abs() < 1e-12);
        assert!(r.phi_second_mid.abs() < 1e-9);
        assert_eq!(r.phi_second_closed, 0.0);
    }

    #[test]
    fn lambda_domain() {
        let c = StmConfig::did(0, 1.0, 2.0, 0.5, 0);
        assert!(phi_at(1.0, &c, &Perturbation::zero(), 10, 0).is_err());
        assert!(phi_at(-0.1, &c, &Perturbation::zero(), 10, 0).is_err());
    }

    #[test]
    fn share_must_stay_inside_unit_interval() {
        let c = StmConfig::did(0, 1.0, 2.0, 0.5, 0);
        assert!(phi_at(0.9, &c, &Perturbation::constant(0.0, 0.0, 0.7), 10, 0).is_err());
    }

    #[test]
    fn closed_form_linear_odds() {
        // With nu(x) = 1 + s x, a constant shift c of gamma and no other
        // change, Phi'' = (1 - pi_hat) c^2 s / pi on any sample.
        let (data, truth) = gen_stm(&StmConfig::did(4000, 1.0, 2.0, 0.5, 5)).unwrap();
        let s = 0.05;
        let base = ReplaceNu { base: true_nuisances(&truth.config), nu: Arc::new(move |x, _| 1.0 + s * x) };
        let c = 0.4;
        let pert = Perturbation::constant(c, 0.0, 0.0);
        let closed = second_order_bias(&data, &base, truth.att_true, &pert, 0.5, &validation_quadrature()).unwrap();
        let frac_control = data.n_control() as f64 / data.len() as f64;
        assert!((closed - frac_control * c * c * s / 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_transport_is_exact() {
        let cfg = StmConfig { eps_sigma: 1e-12, ..StmConfig::did(400, 1.0, 2.0, 0.5, 8) };
        let (data, _) = gen_stm(&cfg).unwrap();
        let gamma = fit_gamma(&data, &NuisanceOptions::default()).unwrap();
        let truth = true_nuisances(&cfg);
        for o in data.observations().filter(|o| !o.treated()) {
            assert!((gamma.eval(o.y0, o.l) - truth.gamma(o.y0, o.l)).abs() < 1e-10);
        }
    }
}
