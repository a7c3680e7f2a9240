use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::kernel::{Bandwidth, Kernel, ProductKernel};
use crate::normal;
use crate::nuisance::gamma::GammaMap;
use crate::scalar::Scalar;

/// Regression learner for `Pr(A = 1 | gamma(Y0, L), L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuLearner {
    /// Nadaraya-Watson regression of `A` on `(z(gamma(Y0, L)), L)`, where `z`
    /// is the fitted normal score of the transported outcome.
    #[default]
    Kernel,
    /// Logistic regression of `A` on `(1, gamma(Y0, L), L)`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NuOptions {
    pub learner: NuLearner,
    pub kernel: Kernel,
    /// Bandwidths over `(z(x), l_1, ..., l_p)`; the regressor enters on its
    /// normal-score scale.
    pub bandwidth: Bandwidth,
    /// Fitted propensities are clipped to `[eps_clip, 1 - eps_clip]`.
    pub eps_clip: f64,
}

impl Default for NuOptions {
    fn default() -> Self {
        NuOptions { learner: NuLearner::Kernel, kernel: Kernel::Gaussian, bandwidth: Bandwidth::Auto, eps_clip: 0.01 }
    }
}

/// Multiple of the per-coordinate density rule of thumb used for the odds
/// regression: a smooth propensity tolerates far more smoothing than a density.
pub const NU_RULE_FACTOR: f64 = 2.0;

// Tabulation resolution of the kernel learner.
const NODES_X_1D: usize = 256;
const NODES_X_2D: usize = 160;
const NODES_L_2D: usize = 48;
const GRID_PAD: f64 = 3.0;
/// Quantile knots of the normal-score map.
const SCORE_KNOTS: usize = 64;

/// Increasing piecewise-linear map `x -> z` through the points
/// `(x_(u), Phi^{-1}(u))` at equispaced sample quantiles `u`, extended
/// linearly past the outer knots.
#[derive(Debug, Clone)]
struct Score<T> {
    xs: Vec<T>,
    zs: Vec<T>,
}

impl<T: Scalar> Score<T> {
    fn fit(x: &[T]) -> Self {
        let mut sorted = x.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite regressors"));
        let n = sorted.len();
        let k = SCORE_KNOTS.min(n);
        let (mut xs, mut zs) = (Vec::with_capacity(k), Vec::with_capacity(k));
        for j in 0..k {
            let u = (j as f64 + 0.5) / k as f64;
            let v = sorted[((u * n as f64) as usize).min(n - 1)];
            if xs.last().is_none_or(|&last| v > last) {
                xs.push(v);
                zs.push(T::lit(normal::quantile(u)));
            }
        }
        if xs.len() < 2 {
            // Constant regressor: any increasing map will do.
            let v = xs[0];
            return Score { xs: vec![v, v + T::one()], zs: vec![T::zero(), T::one()] };
        }
        Score { xs, zs }
    }

    fn interpolate(from: &[T], to: &[T], v: T) -> T {
        let i = from.partition_point(|&f| f <= v).clamp(1, from.len() - 1) - 1;
        to[i] + (to[i + 1] - to[i]) * (v - from[i]) / (from[i + 1] - from[i])
    }

    fn eval(&self, x: T) -> T {
        Self::interpolate(&self.xs, &self.zs, x)
    }

    fn inverse(&self, z: T) -> T {
        Self::interpolate(&self.zs, &self.xs, z)
    }
}

/// Increasing grid nodes.
#[derive(Debug, Clone)]
struct Axis<T> {
    nodes: Vec<T>,
}

impl<T: Scalar> Axis<T> {
    fn uniform(lo: T, hi: T, n: usize) -> Self {
        let step = (hi - lo) / T::from_usize_lossy(n - 1);
        let step = if step > T::zero() { step } else { T::one() };
        Axis { nodes: (0..n).map(|i| lo + step * T::from_usize_lossy(i)).collect() }
    }

    fn spanning(values: impl Iterator<Item = T>, pad: T, n: usize) -> Self {
        let (lo, hi) = values.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::uniform(lo - pad, hi + pad, n)
    }

    #[inline]
    fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    fn node(&self, i: usize) -> T {
        self.nodes[i]
    }

    #[inline]
    fn width(&self, i: usize) -> T {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Cell index and interpolation weight, with constant extrapolation.
    #[inline]
    fn locate(&self, v: T) -> (usize, T) {
        let n = self.nodes.len();
        if !(v > self.nodes[0]) {
            return (0, T::zero());
        }
        if v >= self.nodes[n - 1] {
            return (n - 2, T::one());
        }
        let i = (self.nodes.partition_point(|&u| u <= v) - 1).min(n - 2);
        (i, (v - self.nodes[i]) / self.width(i))
    }
}

#[derive(Debug, Clone)]
enum NuModel<T> {
    /// Propensities tabulated at grid nodes over `x` (and `l_1` when `p = 1`).
    Grid { x: Axis<T>, l: Option<Axis<T>>, vals: Vec<T> },
    /// Direct Nadaraya-Watson evaluation on `(z(x), l)`.
    Exact { kernel: ProductKernel<T>, score: Score<T>, a: Vec<T>, fallback: T },
    /// Logistic regression on standardized features.
    Logistic { coef: Vec<T>, center: Vec<T>, scale: Vec<T> },
}

/// Fitted treatment odds `nu(x, l) = p(x, l) / (1 - p(x, l))` with the
/// propensity `p` clipped away from 0 and 1 and continuous in `x`.
#[derive(Debug, Clone)]
pub struct NuFn<T> {
    model: NuModel<T>,
    eps: T,
    p: usize,
}

impl<T: Scalar> NuFn<T> {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Clipped propensity `Pr(A = 1 | gamma(Y0, L) = x, L = l)`.
    pub fn propensity(&self, x: T, l: &[T]) -> T {
        let raw = match &self.model {
            NuModel::Grid { x: ax, l: None, vals } => {
                let (i, t) = ax.locate(x);
                vals[i] + (vals[i + 1] - vals[i]) * t
            }
            NuModel::Grid { x: ax, l: Some(al), vals } => {
                let (i, t) = ax.locate(x);
                let (j, s) = al.locate(l[0]);
                let nl = al.len();
                let v00 = vals[i * nl + j];
                let v01 = vals[i * nl + j + 1];
                let v10 = vals[(i + 1) * nl + j];
                let v11 = vals[(i + 1) * nl + j + 1];
                let a = v00 + (v01 - v00) * s;
                let b = v10 + (v11 - v10) * s;
                a + (b - a) * t
            }
            NuModel::Exact { kernel, score, a, fallback } => {
                let mut q = Vec::with_capacity(l.len() + 1);
                q.push(score.eval(x));
                q.extend_from_slice(l);
                nadaraya_watson(kernel, a, &q).unwrap_or(*fallback)
            }
            NuModel::Logistic { coef, center, scale } => {
                let mut eta = coef[0] + coef[1] * (x - center[0]) / scale[0];
                for j in 0..l.len() {
                    eta = eta + coef[j + 2] * (l[j] - center[j + 1]) / scale[j + 1];
                }
                T::one() / (T::one() + (-eta).exp())
            }
        };
        raw.max(self.eps).min(T::one() - self.eps)
    }

    /// Exact signed integral of the odds over `[lo, hi]` when they are
    /// tabulated on a grid (the propensity is then piecewise linear in `x`).
    pub fn integral(&self, lo: T, hi: T, l: &[T]) -> Option<T> {
        let (ax, profile): (&Axis<T>, Box<dyn Fn(usize) -> T + '_>) = match &self.model {
            NuModel::Grid { x: ax, l: None, vals } => (ax, Box::new(move |i| vals[i])),
            NuModel::Grid { x: ax, l: Some(al), vals } => {
                let (j, s) = al.locate(l[0]);
                let nl = al.len();
                (ax, Box::new(move |i| vals[i * nl + j] + (vals[i * nl + j + 1] - vals[i * nl + j]) * s))
            }
            _ => return None,
        };
        if lo == hi {
            return Some(T::zero());
        }
        let (a, b, sign) = if lo < hi { (lo, hi, T::one()) } else { (hi, lo, -T::one()) };
        let odds = |q: T| q / (T::one() - q);
        let n = ax.len();
        let first = ax.node(0);
        let last = ax.node(n - 1);
        let mut total = T::zero();
        // Constant extrapolation on either side of the grid.
        if a < first {
            total = total + (b.min(first) - a) * odds(profile(0));
        }
        if b > last {
            total = total + (b - a.max(last)) * odds(profile(n - 1));
        }
        let (ca, cb) = (a.max(first), b.min(last));
        if ca < cb {
            let (ia, ta) = ax.locate(ca);
            let (ib, tb) = ax.locate(cb);
            let at = |i: usize, t: T| profile(i) + (profile(i + 1) - profile(i)) * t;
            if ia == ib {
                total = total + odds_cell(at(ia, ta), at(ib, tb), cb - ca);
            } else {
                total = total + odds_cell(at(ia, ta), profile(ia + 1), (T::one() - ta) * ax.width(ia));
                for i in ia + 1..ib {
                    total = total + odds_cell(profile(i), profile(i + 1), ax.width(i));
                }
                total = total + odds_cell(profile(ib), at(ib, tb), tb * ax.width(ib));
            }
        }
        Some(sign * total)
    }

    pub fn eval(&self, x: T, l: &[T]) -> T {
        let p = self.propensity(x, l);
        p / (T::one() - p)
    }

    /// Range `[eps / (1 - eps), (1 - eps) / eps]` every evaluation lies in.
    pub fn bounds(&self) -> (T, T) {
        let e = self.eps;
        (e / (T::one() - e), (T::one() - e) / e)
    }
}

fn nadaraya_watson<T: Scalar>(kernel: &ProductKernel<T>, a: &[T], q: &[T]) -> Option<T> {
    let mut w = Vec::with_capacity(a.len());
    kernel.weights_into(q, &mut w);
    let den: T = w.iter().copied().sum();
    if !(den > T::zero()) {
        return None;
    }
    let num: T = w.iter().zip(a).map(|(&wi, &ai)| wi * ai).sum();
    Some(num / den)
}

/// Fits `nu` on a training panel: transports every unit's baseline outcome
/// through `gamma` and regresses treatment on `(gamma(Y0, L), L)`.
pub fn fit_nu<T: Scalar>(train: &PanelDataset<T>, gamma: &GammaMap<T>, opts: &NuOptions) -> Result<NuFn<T>> {
    let x: Vec<T> = train.observations().map(|o| gamma.eval(o.y0, o.l)).collect();
    fit_nu_from(&x, train.l(), train.p(), train.a(), opts)
}

/// Fits `nu` from precomputed regressors `x` and covariates `l`.
pub fn fit_nu_from<T: Scalar>(x: &[T], l: &[T], p: usize, a: &[u8], opts: &NuOptions) -> Result<NuFn<T>> {
    let n = x.len();
    if a.len() != n || l.len() != n * p {
        return Err(Error::DimensionMismatch(format!("{n} regressors, {} labels, {} covariate entries", a.len(), l.len())));
    }
    if !(opts.eps_clip > 0.0 && opts.eps_clip < 0.5) {
        return Err(Error::InvalidParameter(format!("eps_clip must lie in (0, 0.5), got {}", opts.eps_clip)));
    }
    let treated = a.iter().filter(|&&v| v == 1).count();
    if treated == 0 || treated == n {
        return Err(Error::DegenerateArm { treated, control: n - treated });
    }
    let d = p + 1;
    let af: Vec<T> = a.iter().map(|&v| if v == 1 { T::one() } else { T::zero() }).collect();
    let eps = T::lit(opts.eps_clip);
    let stack = |first: &dyn Fn(T) -> T| {
        let mut pts = Vec::with_capacity(n * d);
        for i in 0..n {
            pts.push(first(x[i]));
            pts.extend_from_slice(&l[i * p..(i + 1) * p]);
        }
        pts
    };
    let mut model = match opts.learner {
        NuLearner::Logistic => fit_logistic(&stack(&|v| v), &af, d)?,
        NuLearner::Kernel => {
            let score = Score::fit(x);
            let pts = stack(&|v| score.eval(v));
            let h = match &opts.bandwidth {
                Bandwidth::Fixed(_) => opts.bandwidth.resolve(&pts, d)?,
                rule => rule.resolve(&pts, d)?.into_iter().map(|h| h * T::lit(NU_RULE_FACTOR)).collect(),
            };
            let kernel = ProductKernel::new(pts.clone(), &h, opts.kernel);
            let fallback = T::from_usize_lossy(treated) / T::from_usize_lossy(n);
            let nodes = if p == 0 { NODES_X_1D } else { NODES_X_2D };
            // Nodes equispaced in the score, so the grid follows the data into heavy tails.
            let z_axis = Axis::spanning((0..n).map(|i| pts[i * d]), h[0] * T::lit(GRID_PAD), nodes);
            let x_axis = Axis { nodes: z_axis.nodes.iter().map(|&z| score.inverse(z)).collect() };
            match p {
                0 => {
                    let vals = z_axis
                        .nodes
                        .iter()
                        .map(|&z| nadaraya_watson(&kernel, &af, &[z]).unwrap_or(fallback))
                        .collect();
                    NuModel::Grid { x: x_axis, l: None, vals }
                }
                1 => tabulate_2d(&pts, &af, &h, opts.kernel, &kernel, &z_axis, x_axis, fallback),
                _ => NuModel::Exact { kernel, score, a: af, fallback },
            }
        }
    };
    if let NuModel::Grid { vals, .. } = &mut model {
        // Clipping the nodes keeps interpolation inside the clip range.
        for v in vals.iter_mut() {
            *v = v.max(eps).min(T::one() - eps);
        }
    }
    Ok(NuFn { model, eps, p })
}

/// `int_0^w q / (1 - q)` for `q` linear from `qa` to `qb` over width `w`.
fn odds_cell<T: Scalar>(qa: T, qb: T, w: T) -> T {
    let d = qb - qa;
    let m = (qa + qb) / T::lit(2.0);
    let r = T::one() - m;
    if d.abs() < T::lit(1e-4) {
        // Midpoint expansion of the mean of 1 / (1 - q).
        return w * (T::one() / r + d * d / (T::lit(12.0) * r * r * r) - T::one());
    }
    w * (((d / (T::one() - qb)).ln_1p()) / d - T::one())
}

/// Tabulates the propensity over the score nodes `z_axis` (stored at their
/// preimages `x_axis`) and an equispaced covariate axis.
#[allow(clippy::too_many_arguments)]
fn tabulate_2d<T: Scalar>(
    pts: &[T],
    a: &[T],
    h: &[T],
    kind: Kernel,
    exact: &ProductKernel<T>,
    z_axis: &Axis<T>,
    x_axis: Axis<T>,
    fallback: T,
) -> NuModel<T> {
    let n = a.len();
    let al = Axis::spanning((0..n).map(|i| pts[2 * i + 1]), h[1] * T::lit(GRID_PAD), NODES_L_2D);
    let profile = |axis: &Axis<T>, col: usize, hh: T| -> Vec<T> {
        let mut out = Vec::with_capacity(axis.len() * n);
        for &node in &axis.nodes {
            out.extend((0..n).map(|i| {
                let u = (node - pts[2 * i + col]) / hh;
                match kind {
                    Kernel::Gaussian => (-(u * u) / T::lit(2.0)).exp(),
                    Kernel::Epanechnikov => kind.density(u),
                }
            }));
        }
        out
    };
    let kx = profile(z_axis, 0, h[0]);
    let kl = profile(&al, 1, h[1]);
    let tiny = T::min_positive_value() * T::lit(1e20);
    let mut vals = Vec::with_capacity(z_axis.len() * al.len());
    for g in 0..z_axis.len() {
        let rx = &kx[g * n..(g + 1) * n];
        for q in 0..al.len() {
            let rl = &kl[q * n..(q + 1) * n];
            let mut num = T::zero();
            let mut den = T::zero();
            for i in 0..n {
                let w = rx[i] * rl[i];
                den = den + w;
                num = num + w * a[i];
            }
            let v = if den > tiny {
                num / den
            } else {
                nadaraya_watson(exact, a, &[z_axis.node(g), al.node(q)]).unwrap_or(fallback)
            };
            vals.push(v);
        }
    }
    NuModel::Grid { x: x_axis, l: Some(al), vals }
}

fn fit_logistic<T: Scalar>(pts: &[T], a: &[T], d: usize) -> Result<NuModel<T>> {
    let n = a.len();
    let mut center = vec![T::zero(); d];
    let mut scale = vec![T::one(); d];
    for j in 0..d {
        let col: Vec<T> = (0..n).map(|i| pts[i * d + j]).collect();
        center[j] = crate::scalar::mean(&col);
        let sd = crate::scalar::std_dev(&col);
        scale[j] = if sd > T::zero() { sd } else { T::one() };
    }
    let k = d + 1;
    let feat = |i: usize, out: &mut [T]| {
        out[0] = T::one();
        for j in 0..d {
            out[j + 1] = (pts[i * d + j] - center[j]) / scale[j];
        }
    };
    let mut beta = vec![T::zero(); k];
    let mut f = vec![T::zero(); k];
    let ridge = T::lit(1e-8) * T::from_usize_lossy(n);
    for _ in 0..100 {
        let mut hess = vec![T::zero(); k * k];
        let mut grad = vec![T::zero(); k];
        for i in 0..n {
            feat(i, &mut f);
            let eta: T = (0..k).map(|j| beta[j] * f[j]).sum();
            let mu = T::one() / (T::one() + (-eta).exp());
            let w = (mu * (T::one() - mu)).max(T::lit(1e-12));
            for r in 0..k {
                grad[r] = grad[r] + f[r] * (a[i] - mu);
                for c in 0..=r {
                    hess[r * k + c] = hess[r * k + c] + w * f[r] * f[c];
                }
            }
        }
        for r in 0..k {
            grad[r] = grad[r] - ridge * beta[r];
            hess[r * k + r] = hess[r * k + r] + ridge;
            for c in 0..r {
                hess[c * k + r] = hess[r * k + c];
            }
        }
        let step = cholesky_solve(&hess, &grad, k)
            .ok_or_else(|| Error::InvalidParameter("logistic propensity fit is singular".into()))?;
        let mut max_step = T::zero();
        for j in 0..k {
            beta[j] = beta[j] + step[j];
            max_step = max_step.max(step[j].abs());
        }
        if max_step < T::lit(1e-10) {
            break;
        }
    }
    Ok(NuModel::Logistic { coef: beta, center, scale })
}

/// Solves `m x = b` for symmetric positive definite `m` (row-major `k x k`).
fn cholesky_solve<T: Scalar>(m: &[T], b: &[T], k: usize) -> Option<Vec<T>> {
    let mut low = vec![T::zero(); k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = m[i * k + j];
            for t in 0..j {
                s = s - low[i * k + t] * low[j * k + t];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                low[i * k + i] = s.sqrt();
            } else {
                low[i * k + j] = s / low[j * k + j];
            }
        }
    }
    let mut y = vec![T::zero(); k];
    for i in 0..k {
        let mut s = b[i];
        for t in 0..i {
            s = s - low[i * k + t] * y[t];
        }
        y[i] = s / low[i * k + i];
    }
    let mut x = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for t in i + 1..k {
            s = s - low[t * k + i] * x[t];
        }
        x[i] = s / low[i * k + i];
    }
    Some(x)
}
