//! One-dimensional quadrature for the odds integrals of the influence functions.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    AdaptiveSimpson,
    FixedTrapezoid,
    /// Fixed Gauss-Legendre rule with `n_points` nodes; smooth in the endpoints.
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rule: QuadratureRule,
    /// Absolute tolerance of the adaptive rule.
    pub abs_tol: f64,
    /// Maximum bisection depth of the adaptive rule.
    pub max_depth: u32,
    /// Number of nodes of the fixed rule.
    pub n_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rule: QuadratureRule::AdaptiveSimpson, abs_tol: 1e-6, max_depth: 40, n_points: 256 }
    }
}

impl QuadratureConfig {
    pub fn adaptive(abs_tol: f64) -> Self {
        QuadratureConfig { abs_tol, ..Self::default() }
    }

    pub fn trapezoid(n_points: usize) -> Self {
        QuadratureConfig { rule: QuadratureRule::FixedTrapezoid, n_points, ..Self::default() }
    }

    pub fn gauss_legendre(n_points: usize) -> Self {
        QuadratureConfig { rule: QuadratureRule::GaussLegendre, n_points, ..Self::default() }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.rule == QuadratureRule::FixedTrapezoid && self.n_points < 2 {
            return Err(Error::InvalidParameter("trapezoid rule needs at least 2 nodes".into()));
        }
        if self.rule == QuadratureRule::GaussLegendre && self.n_points < 2 {
            return Err(Error::InvalidParameter("Gauss-Legendre rule needs at least 2 nodes".into()));
        }
        Ok(())
    }
}

/// Relative accuracy floor of the adaptive rule.
pub const REL_TOL: f64 = 1e-10;

/// Signed integral of `f` from `lo` to `hi`; `integrate(f, b, a) = -integrate(f, a, b)`.
pub fn integrate<T: Scalar>(mut f: impl FnMut(T) -> T, lo: T, hi: T, cfg: &QuadratureConfig) -> Result<T> {
    if lo == hi {
        return Ok(T::zero());
    }
    let (a, b, sign) = if lo < hi { (lo, hi, T::one()) } else { (hi, lo, -T::one()) };
    let value = match cfg.rule {
        QuadratureRule::FixedTrapezoid => trapezoid(&mut f, a, b, cfg.n_points.max(2)),
        QuadratureRule::GaussLegendre => gauss_legendre(&mut f, a, b, cfg.n_points.max(2)),
        QuadratureRule::AdaptiveSimpson => {
            let fa = f(a);
            let fb = f(b);
            let m = mid(a, b);
            let fm = f(m);
            let whole = simpson(a, b, fa, fm, fb);
            // Large integrals are resolved to a relative accuracy instead.
            let tol = T::lit(cfg.abs_tol).max(T::lit(REL_TOL) * whole.abs());
            // Panels whose error is negligible against the whole integral are
            // accepted even below the halved tolerance, so kinks terminate.
            let floor = T::lit(REL_TOL * 1e-3) * whole.abs();
            adaptive(&mut f, a, b, fa, fm, fb, whole, tol, floor, cfg.max_depth)
                .ok_or(Error::QuadratureNonConvergence { lo: lo.as_f64(), hi: hi.as_f64() })?
        }
    };
    Ok(sign * value)
}

#[inline]
fn mid<T: Scalar>(a: T, b: T) -> T {
    a + (b - a) / T::lit(2.0)
}

#[inline]
fn simpson<T: Scalar>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<T: Scalar>(
    f: &mut impl FnMut(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    global_floor: T,
    depth: u32,
) -> Option<T> {
    let m = mid(a, b);
    let lm = mid(a, m);
    let rm = mid(m, b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let fifteen = T::lit(15.0);
    // Relative floor keeps low-precision scalars from chasing sub-ulp tolerances.
    let floor = (T::lit(64.0) * T::epsilon() * (left + right).abs()).max(global_floor);
    if delta.abs() <= fifteen * tol || delta.abs() <= floor || m <= a || m >= b {
        return Some(left + right + delta / fifteen);
    }
    if depth == 0 {
        return None;
    }
    let half = tol / T::lit(2.0);
    let l = adaptive(f, a, m, fa, flm, fm, left, half, global_floor, depth - 1)?;
    let r = adaptive(f, m, b, fm, frm, fb, right, half, global_floor, depth - 1)?;
    Some(l + r)
}

thread_local! {
    static LEGENDRE: RefCell<HashMap<usize, Rc<Vec<(f64, f64)>>>> = RefCell::new(HashMap::new());
}

fn gauss_legendre<T: Scalar>(f: &mut impl FnMut(T) -> T, a: T, b: T, n: usize) -> T {
    let rule = LEGENDRE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                Rc::new(GaussLegendre::new(n).expect("at least two nodes").as_node_weight_pairs().to_vec())
            })
            .clone()
    });
    let half = (b - a) / T::lit(2.0);
    let centre = a + half;
    let sum: T = rule.iter().map(|&(x, w)| f(centre + half * T::lit(x)) * T::lit(w)).sum();
    half * sum
}

fn trapezoid<T: Scalar>(f: &mut impl FnMut(T) -> T, a: T, b: T, n: usize) -> T {
    let steps = T::from_usize_lossy(n - 1);
    let h = (b - a) / steps;
    let mut acc = (f(a) + f(b)) / T::lit(2.0);
    for i in 1..n - 1 {
        acc = acc + f(a + h * T::from_usize_lossy(i));
    }
    acc * h
}
