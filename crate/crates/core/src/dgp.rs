//! Simulation designs with known truth.
//!
//! Untreated outcomes follow `Y_t = beta_t(k_t(L) + m'U + eps_t)` with
//! `L ~ N(0, I_p)`, latent `U ~ N(0, I_q)` and `eps_t ~ N(0, sigma^2)`.
//! Treatment is `A = 1{c0 + c_L'L + c_U'U + delta > 0}` with logistic `delta`.
//! The transport map is then `beta_1(beta_0^{-1}(y) + k_1(l) - k_0(l))` and the
//! odds `nu` reduce to a one-dimensional Gaussian-logistic integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::fold::derive_seed;
use crate::normal::{expit, logistic_normal_mean, TailProb};
use crate::nuisance::Nuisance;

/// Strictly increasing outcome transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Transform {
    Identity,
    Exp,
    /// `sign(x) |x|^c` with `c > 0`.
    Power { c: f64 },
    /// `a x + b` with `a > 0`.
    Affine { a: f64, b: f64 },
}

impl Transform {
    pub fn check(&self) -> Result<()> {
        match *self {
            Transform::Power { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidTransform(format!("power exponent must be positive, got {c}")))
            }
            Transform::Affine { a, b } if !(a > 0.0 && a.is_finite() && b.is_finite()) => {
                Err(Error::InvalidTransform(format!("affine slope must be positive, got {a}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Exp => x.exp(),
            Transform::Power { c } => x.signum() * x.abs().powf(c),
            Transform::Affine { a, b } => a * x + b,
        }
    }

    /// Inverse; `NaN` outside the range (non-positive input to the inverse of `Exp`).
    #[inline]
    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Transform::Identity => y,
            Transform::Exp => {
                if y > 0.0 {
                    y.ln()
                } else {
                    f64::NAN
                }
            }
            Transform::Power { c } => y.signum() * y.abs().powf(1.0 / c),
            Transform::Affine { a, b } => (y - b) / a,
        }
    }
}

/// `intercept + coefs'l`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Linear {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl Linear {
    pub fn new(intercept: f64, coefs: Vec<f64>) -> Self {
        Linear { intercept, coefs }
    }

    #[inline]
    pub fn eval(&self, l: &[f64]) -> f64 {
        self.intercept + self.coefs.iter().zip(l).map(|(c, x)| c * x).sum::<f64>()
    }
}

/// Logistic treatment index `intercept + l_coefs'L + u_coefs'U`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreatModel {
    pub intercept: f64,
    pub l_coefs: Vec<f64>,
    pub u_coefs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Effect {
    /// `Y_1(1) = Y_1(0) + delta`.
    Additive { delta: f64 },
    /// `Y_1(1) = factor * Y_1(0)`.
    Multiplicative { factor: f64 },
}

/// Largest admissible Euclidean norm of the treatment coefficients. Keeps
/// propensities away from 0 and 1 for all but far-tail units.
pub const MAX_TREAT_NORM: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StmConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub beta0: Transform,
    pub beta1: Transform,
    pub k0: Linear,
    pub k1: Linear,
    pub m_coeffs: Vec<f64>,
    pub treat_model: TreatModel,
    pub eps_sigma: f64,
    /// `kappa` in `sd(eps_1) = sigma * exp(kappa * U_1)`; nonzero values break
    /// the distributional bridge on purpose.
    #[serde(default)]
    pub eps1_u_scale: f64,
    pub effect: Effect,
    pub seed: u64,
}

/// Names of the shipped designs.
pub const PRESETS: [&str; 5] = ["did", "stm-exp", "stm-power", "stm-q3", "violation"];

impl StmConfig {
    /// Linear difference-in-differences design: identity transforms, no
    /// covariates, treatment independent of everything.
    pub fn did(n: usize, trend: f64, effect: f64, pi: f64, seed: u64) -> Self {
        StmConfig {
            n,
            p: 0,
            q: 1,
            beta0: Transform::Identity,
            beta1: Transform::Identity,
            k0: Linear::default(),
            k1: Linear::new(trend, vec![]),
            m_coeffs: vec![1.0],
            treat_model: TreatModel { intercept: (pi / (1.0 - pi)).ln(), l_coefs: vec![], u_coefs: vec![0.0] },
            eps_sigma: 0.5,
            eps1_u_scale: 0.0,
            effect: Effect::Additive { delta: effect },
            seed,
        }
    }

    /// Exponential period-1 transform with one covariate and latent confounding.
    pub fn stm_exp(n: usize, seed: u64) -> Self {
        StmConfig {
            n,
            p: 1,
            q: 1,
            beta0: Transform::Identity,
            beta1: Transform::Exp,
            k0: Linear::new(0.0, vec![0.5]),
            k1: Linear::new(0.2, vec![0.2]),
            m_coeffs: vec![0.4],
            treat_model: TreatModel { intercept: -0.2, l_coefs: vec![0.5], u_coefs: vec![0.5] },
            eps_sigma: 0.3,
            eps1_u_scale: 0.0,
            effect: Effect::Additive { delta: 1.0 },
            seed,
        }
    }

    /// Cubic period-1 transform after an affine baseline transform.
    pub fn stm_power(n: usize, seed: u64) -> Self {
        StmConfig {
            n,
            p: 1,
            q: 1,
            beta0: Transform::Affine { a: 2.0, b: 1.0 },
            beta1: Transform::Power { c: 3.0 },
            k0: Linear::new(0.0, vec![0.4]),
            k1: Linear::new(0.3, vec![-0.2]),
            m_coeffs: vec![0.5],
            treat_model: TreatModel { intercept: 0.1, l_coefs: vec![-0.4], u_coefs: vec![0.7] },
            eps_sigma: 0.5,
            eps1_u_scale: 0.0,
            effect: Effect::Additive { delta: 0.5 },
            seed,
        }
    }

    /// Three latent confounders and two covariates.
    pub fn stm_q3(n: usize, seed: u64) -> Self {
        StmConfig {
            n,
            p: 2,
            q: 3,
            beta0: Transform::Identity,
            beta1: Transform::Affine { a: 1.5, b: -0.5 },
            k0: Linear::new(0.0, vec![0.3, -0.2]),
            k1: Linear::new(0.5, vec![0.1, 0.4]),
            m_coeffs: vec![0.5, -0.4, 0.3],
            treat_model: TreatModel { intercept: 0.0, l_coefs: vec![0.3, 0.2], u_coefs: vec![0.6, 0.5, -0.4] },
            eps_sigma: 0.5,
            eps1_u_scale: 0.0,
            effect: Effect::Additive { delta: 1.0 },
            seed,
        }
    }

    /// `stm-exp` with period-1 noise scale depending on the latent confounder.
    pub fn violation(n: usize, seed: u64) -> Self {
        StmConfig { eps1_u_scale: 0.5, ..Self::stm_exp(n, seed) }
    }

    /// A shipped design by name (`did` uses trend 1, effect 2, share 0.5).
    pub fn preset(name: &str, n: usize, seed: u64) -> Option<Self> {
        Some(match name {
            "did" => Self::did(n, 1.0, 2.0, 0.5, seed),
            "stm-exp" => Self::stm_exp(n, seed),
            "stm-power" => Self::stm_power(n, seed),
            "stm-q3" => Self::stm_q3(n, seed),
            "violation" => Self::violation(n, seed),
            _ => return None,
        })
    }

    pub fn check(&self) -> Result<()> {
        self.beta0.check()?;
        self.beta1.check()?;
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.k0.coefs.len() != self.p || self.k1.coefs.len() != self.p || self.treat_model.l_coefs.len() != self.p {
            return Err(Error::DimensionMismatch(format!("covariate coefficients must have length p = {}", self.p)));
        }
        if self.m_coeffs.len() != self.q || self.treat_model.u_coefs.len() != self.q {
            return Err(Error::DimensionMismatch(format!("latent coefficients must have length q = {}", self.q)));
        }
        if !(self.eps_sigma > 0.0 && self.eps_sigma.is_finite()) {
            return bad("eps_sigma must be positive");
        }
        if self.eps1_u_scale != 0.0 && self.q == 0 {
            return bad("eps1_u_scale needs a latent confounder");
        }
        let tm = &self.treat_model;
        let norm2 = tm.intercept.powi(2) + tm.l_coefs.iter().chain(&tm.u_coefs).map(|c| c * c).sum::<f64>();
        if norm2.sqrt() > MAX_TREAT_NORM {
            return bad("treatment coefficients exceed the positivity norm bound");
        }
        if let Effect::Multiplicative { factor } = self.effect {
            if !factor.is_finite() {
                return bad("multiplicative effect must be finite");
            }
        }
        Ok(())
    }

    /// Var of `m'U + eps_0`.
    fn s2(&self) -> f64 {
        self.m_coeffs.iter().map(|c| c * c).sum::<f64>() + self.eps_sigma * self.eps_sigma
    }

    pub fn gamma_true(&self, y: f64, l: &[f64]) -> f64 {
        self.beta1.apply(self.beta0.inverse(y) + self.k1.eval(l) - self.k0.eval(l))
    }

    /// `Pr(A = 1)`.
    pub fn pi_true(&self) -> f64 {
        let tm = &self.treat_model;
        let var: f64 = tm.l_coefs.iter().chain(&tm.u_coefs).map(|c| c * c).sum();
        logistic_normal_mean(tm.intercept, var)
    }

    /// `Pr(A = 1 | gamma(Y0, L) = x, L = l)`.
    pub fn propensity_true(&self, x: f64, l: &[f64]) -> f64 {
        let (mu, var) = self.conditional_index(x, l);
        logistic_normal_mean(mu, var)
    }

    pub fn nu_true(&self, x: f64, l: &[f64]) -> f64 {
        let p = self.propensity_true(x, l);
        p / (1.0 - p)
    }

    /// Mean and variance of the treatment index given `m'U + eps_0 = z` and `L = l`.
    fn conditional_index(&self, x: f64, l: &[f64]) -> (f64, f64) {
        let tm = &self.treat_model;
        let z = self.beta1.inverse(x) - self.k1.eval(l);
        let s2 = self.s2();
        let cm: f64 = tm.u_coefs.iter().zip(&self.m_coeffs).map(|(c, m)| c * m).sum();
        let cc: f64 = tm.u_coefs.iter().map(|c| c * c).sum();
        let lin: f64 = tm.l_coefs.iter().zip(l).map(|(c, v)| c * v).sum();
        (tm.intercept + lin + cm * z / s2, (cc - cm * cm / s2).max(0.0))
    }

    /// Whether the odds are constant (treatment independent of outcomes and covariates).
    pub fn nu_is_constant(&self) -> bool {
        let tm = &self.treat_model;
        tm.l_coefs.iter().chain(&tm.u_coefs).all(|&c| c == 0.0)
    }
}

/// Ground truth implied by a design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleTruth {
    pub att_true: f64,
    pub pi_true: f64,
    /// Odds available in closed form (constant) rather than by quadrature.
    pub nu_available: bool,
    /// Draws behind a Monte Carlo truth; zero when every truth is analytic.
    pub mc_size: usize,
    pub config: StmConfig,
}

impl OracleTruth {
    pub fn gamma_true(&self, y: f64, l: &[f64]) -> f64 {
        self.config.gamma_true(y, l)
    }
}

/// Draws generated for one unit, latent parts included.
#[derive(Debug, Clone)]
pub struct Draw {
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub a: u8,
    pub y0: f64,
    pub y1_untreated: f64,
    pub y1: f64,
}

fn draw_unit(cfg: &StmConfig, rng: &mut ChaCha8Rng) -> Draw {
    let l: Vec<f64> = (0..cfg.p).map(|_| rng.sample(StandardNormal)).collect();
    let u: Vec<f64> = (0..cfg.q).map(|_| rng.sample(StandardNormal)).collect();
    let v: f64 = rng.gen_range(f64::EPSILON..1.0);
    let delta = (v / (1.0 - v)).ln();
    let e0: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.eps_sigma;
    let mut e1: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.eps_sigma;
    if cfg.eps1_u_scale != 0.0 {
        e1 *= (cfg.eps1_u_scale * u[0]).exp();
    }
    let tm = &cfg.treat_model;
    let index = tm.intercept
        + tm.l_coefs.iter().zip(&l).map(|(c, x)| c * x).sum::<f64>()
        + tm.u_coefs.iter().zip(&u).map(|(c, x)| c * x).sum::<f64>();
    let a = u8::from(index + delta > 0.0);
    let mu: f64 = cfg.m_coeffs.iter().zip(&u).map(|(c, x)| c * x).sum();
    let y0 = cfg.beta0.apply(cfg.k0.eval(&l) + mu + e0);
    let y1_untreated = cfg.beta1.apply(cfg.k1.eval(&l) + mu + e1);
    let y1 = if a == 1 {
        match cfg.effect {
            Effect::Additive { delta } => y1_untreated + delta,
            Effect::Multiplicative { factor } => y1_untreated * factor,
        }
    } else {
        y1_untreated
    };
    Draw { l, u, a, y0, y1_untreated, y1 }
}

/// `n` draws with latent variables exposed.
pub fn draw_units(cfg: &StmConfig, n: usize, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw_unit(cfg, &mut rng)).collect()
}

/// Monte Carlo draws behind non-additive effect truths.
pub const TRUTH_MC_SIZE: usize = 1_000_000;

/// Generates a dataset of `cfg.n` units and its oracle truth.
pub fn gen_stm(cfg: &StmConfig) -> Result<(PanelDataset<f64>, OracleTruth)> {
    cfg.check()?;
    let draws = draw_units(cfg, cfg.n, cfg.seed);
    let mut y0 = Vec::with_capacity(cfg.n);
    let mut y1 = Vec::with_capacity(cfg.n);
    let mut a = Vec::with_capacity(cfg.n);
    let mut l = Vec::with_capacity(cfg.n * cfg.p);
    for d in &draws {
        y0.push(d.y0);
        y1.push(d.y1);
        a.push(d.a);
        l.extend_from_slice(&d.l);
    }
    if y0.iter().chain(&y1).any(|v| !v.is_finite()) {
        return Err(Error::InvalidTransform("transform produced non-finite outcomes".into()));
    }
    let data = PanelDataset::new(y0, y1, a, l, cfg.p)?;
    let (att_true, mc_size) = match cfg.effect {
        Effect::Additive { delta } => (delta, 0),
        Effect::Multiplicative { factor } => {
            // E[(factor - 1) Y_1(0) | A = 1] on fresh draws.
            let truth = draw_units(cfg, TRUTH_MC_SIZE, derive_seed(cfg.seed, 0x7a11));
            let (mut s, mut k) = (0.0, 0usize);
            for d in truth.iter().filter(|d| d.a == 1) {
                s += (factor - 1.0) * d.y1_untreated;
                k += 1;
            }
            (s / k.max(1) as f64, TRUTH_MC_SIZE)
        }
    };
    let truth = OracleTruth { att_true, pi_true: cfg.pi_true(), nu_available: cfg.nu_is_constant(), mc_size, config: cfg.clone() };
    Ok((data, truth))
}

/// Difference-in-differences design with trend `c` and effect `delta`.
pub fn gen_did(n: usize, c: f64, delta: f64, pi: f64, seed: u64) -> Result<(PanelDataset<f64>, OracleTruth)> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidParameter(format!("treated share must lie in (0, 1), got {pi}")));
    }
    gen_stm(&StmConfig::did(n, c, delta, pi, seed))
}

/// The true `(gamma, nu, pi)` of a design.
#[derive(Debug, Clone)]
pub struct TrueNuisances {
    cfg: StmConfig,
    pi: f64,
    constant_nu: Option<f64>,
}

pub fn true_nuisances(cfg: &StmConfig) -> TrueNuisances {
    let pi = cfg.pi_true();
    let constant_nu = cfg.nu_is_constant().then(|| pi / (1.0 - pi));
    TrueNuisances { cfg: cfg.clone(), pi, constant_nu }
}

impl TrueNuisances {
    pub fn config(&self) -> &StmConfig {
        &self.cfg
    }
}

impl Nuisance<f64> for TrueNuisances {
    fn gamma(&self, y: f64, l: &[f64]) -> f64 {
        self.cfg.gamma_true(y, l)
    }
    fn nu(&self, x: f64, l: &[f64]) -> f64 {
        match self.constant_nu {
            Some(v) => v,
            None => self.cfg.nu_true(x, l),
        }
    }
    fn pi(&self) -> f64 {
        self.pi
    }
}

/// Monte Carlo estimate of the true odds at `(x, l)`.
///
/// Independent of the quadrature in [`StmConfig::nu_true`]: latent draws are
/// conditioned on `m'U + eps_0 = z` by Gaussian residual adjustment and the
/// logistic propensity is averaged over them.
pub fn mc_nu_oracle(cfg: &StmConfig, x: f64, l: &[f64], mc_size: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tm = &cfg.treat_model;
    let z = cfg.beta1.inverse(x) - cfg.k1.eval(l);
    let s2 = cfg.s2();
    let lin: f64 = tm.intercept + tm.l_coefs.iter().zip(l).map(|(c, v)| c * v).sum::<f64>();
    let mut u = vec![0.0; cfg.q];
    let mut acc = 0.0;
    for _ in 0..mc_size {
        for v in u.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let e: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.eps_sigma;
        let s: f64 = cfg.m_coeffs.iter().zip(&u).map(|(m, v)| m * v).sum::<f64>() + e;
        let shift = (z - s) / s2;
        let index: f64 = lin + tm.u_coefs.iter().zip(&u).zip(&cfg.m_coeffs).map(|((c, v), m)| c * (v + m * shift)).sum::<f64>();
        acc += expit(index);
    }
    let p = acc / mc_size as f64;
    p / (1.0 - p)
}

/// `Q_{Y1 | A=0, L=l, U=u} o F_{Y0 | A=0, L=l, U=u}(y)`, evaluated in closed form.
///
/// Given `(L, U)` the noise is independent of treatment, so both laws are
/// transformed normals; the probability is carried by its smaller tail.
pub fn qq_transform(cfg: &StmConfig, y: f64, l: &[f64], u: &[f64]) -> f64 {
    let mu: f64 = cfg.m_coeffs.iter().zip(u).map(|(m, v)| m * v).sum();
    let sd1 = cfg.eps_sigma * if cfg.eps1_u_scale != 0.0 { (cfg.eps1_u_scale * u[0]).exp() } else { 1.0 };
    let z0 = (cfg.beta0.inverse(y) - cfg.k0.eval(l) - mu) / cfg.eps_sigma;
    let z = TailProb::of_z(z0).z();
    cfg.beta1.apply(cfg.k1.eval(l) + mu + sd1 * z)
}

/// Largest `|qq(y, l, u) - qq(y, l, u')|` over the grids, with `u` spread
/// along every latent coordinate (`u = t * 1`) and `l` on `{-1, 0, 1} * 1`.
pub fn qq_invariance_diagnostic(cfg: &StmConfig, u_grid: &[f64], y_grid: &[f64]) -> f64 {
    let l_grid: Vec<Vec<f64>> = [-1.0, 0.0, 1.0].iter().map(|&t| vec![t; cfg.p]).collect();
    let mut worst: f64 = 0.0;
    for l in &l_grid {
        for &y in y_grid {
            let vals: Vec<f64> = u_grid.iter().map(|&t| qq_transform(cfg, y, l, &vec![t; cfg.q])).collect();
            let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            worst = worst.max(hi - lo);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_invert() {
        for t in [Transform::Identity, Transform::Exp, Transform::Power { c: 3.0 }, Transform::Affine { a: 2.0, b: -1.0 }] {
            for x in [-1.3, 0.2, 2.5] {
                assert!((t.inverse(t.apply(x)) - x).abs() < 1e-12, "{t:?} at {x}");
            }
        }
        assert!(Transform::Exp.inverse(-1.0).is_nan());
        assert!(Transform::Power { c: 0.0 }.check().is_err());
        assert!(Transform::Affine { a: -1.0, b: 0.0 }.check().is_err());
    }

    #[test]
    fn gamma_closed_forms() {
        let did = StmConfig::did(10, 1.5, 0.0, 0.5, 0);
        assert_eq!(did.gamma_true(2.0, &[]), 3.5);
        let mut e = StmConfig::stm_exp(10, 0);
        e.k0 = Linear::new(0.1, vec![0.2]);
        e.k1 = Linear::new(0.4, vec![-0.3]);
        let l = [0.7];
        let want = (1.2f64 + 0.4 - 0.3 * 0.7 - 0.1 - 0.2 * 0.7).exp();
        assert!((e.gamma_true(1.2, &l) - want).abs() < 1e-14);
    }

    #[test]
    fn additive_truth_and_null() {
        let (_, t) = gen_stm(&StmConfig::stm_exp(50, 1)).unwrap();
        assert_eq!(t.att_true, 1.0);
        let (_, t) = gen_did(50, 0.0, 0.0, 0.5, 1).unwrap();
        assert_eq!(t.att_true, 0.0);
    }

    #[test]
    fn independence_odds() {
        let cfg = StmConfig::did(10, 1.0, 2.0, 0.3, 0);
        let eta = true_nuisances(&cfg);
        assert!((eta.pi() - 0.3).abs() < 1e-12);
        assert!((eta.nu(0.4, &[]) - 0.3 / 0.7).abs() < 1e-12);
        let half = true_nuisances(&StmConfig::did(10, 1.0, 2.0, 0.5, 0));
        assert!((half.nu(-3.0, &[]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_determinism() {
        let a = gen_stm(&StmConfig::stm_q3(200, 9)).unwrap().0;
        let b = gen_stm(&StmConfig::stm_q3(200, 9)).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn config_checks() {
        for name in PRESETS {
            StmConfig::preset(name, 10, 0).unwrap().check().unwrap();
        }
        let mut c = StmConfig::stm_exp(10, 0);
        c.treat_model.u_coefs = vec![5.0];
        assert!(c.check().is_err());
        c = StmConfig::stm_exp(10, 0);
        c.k0.coefs.clear();
        assert!(matches!(c.check(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn identity_transport_is_exact() {
        let mut c = StmConfig::did(10, 0.0, 0.0, 0.5, 0);
        c.k1 = c.k0.clone();
        for y in [-3.0, -0.5, 0.0, 1.0, 4.0] {
            assert!((qq_transform(&c, y, &[], &[0.7]) - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn quadrature_odds_against_monte_carlo() {
        let c = StmConfig::stm_exp(10, 0);
        for &(x, l) in &[(0.8, -0.5), (1.5, 0.0), (3.0, 1.0)] {
            let exact = c.nu_true(x, &[l]);
            let mc = mc_nu_oracle(&c, x, &[l], 200_000, 11);
            assert!((mc / exact - 1.0).abs() < 0.01, "{x}, {l}: {mc} vs {exact}");
        }
    }
}
