//! Observed-data containers shared by every estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two-period panel `(y0, y1, a, l)` with `p` pre-treatment covariates.
///
/// Covariates are stored row-major: row `i` is `l[i * p..(i + 1) * p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset<T> {
    y0: Vec<T>,
    y1: Vec<T>,
    a: Vec<u8>,
    l: Vec<T>,
    p: usize,
}

/// One unit of a [`PanelDataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<'a, T> {
    pub y0: T,
    pub y1: T,
    pub a: u8,
    pub l: &'a [T],
}

impl<'a, T: Scalar> Observation<'a, T> {
    pub fn new(y0: T, y1: T, a: u8, l: &'a [T]) -> Self {
        Observation { y0, y1, a, l }
    }

    #[inline]
    pub fn treated(&self) -> bool {
        self.a == 1
    }

    #[inline]
    pub(crate) fn a_scalar(&self) -> T {
        if self.treated() {
            T::one()
        } else {
            T::zero()
        }
    }
}

impl<T: Scalar> PanelDataset<T> {
    /// Builds a dataset and checks every invariant.
    pub fn new(y0: Vec<T>, y1: Vec<T>, a: Vec<u8>, l: Vec<T>, p: usize) -> Result<Self> {
        let data = PanelDataset { y0, y1, a, l, p };
        validate(&data)?;
        Ok(data)
    }

    /// Covariate-free panel.
    pub fn without_covariates(y0: Vec<T>, y1: Vec<T>, a: Vec<u8>) -> Result<Self> {
        Self::new(y0, y1, a, Vec::new(), 0)
    }

    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(y0: Vec<T>, y1: Vec<T>, a: Vec<u8>, l: Vec<T>, p: usize) -> Self {
        PanelDataset { y0, y1, a, l, p }
    }

    pub fn len(&self) -> usize {
        self.y0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y0(&self) -> &[T] {
        &self.y0
    }

    pub fn y1(&self) -> &[T] {
        &self.y1
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    /// Row-major covariate matrix.
    pub fn l(&self) -> &[T] {
        &self.l
    }

    pub fn covariates(&self, i: usize) -> &[T] {
        &self.l[i * self.p..(i + 1) * self.p]
    }

    pub fn observation(&self, i: usize) -> Observation<'_, T> {
        Observation { y0: self.y0[i], y1: self.y1[i], a: self.a[i], l: self.covariates(i) }
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation<'_, T>> + '_ {
        (0..self.len()).map(move |i| self.observation(i))
    }

    pub fn n_treated(&self) -> usize {
        self.a.iter().filter(|&&a| a == 1).count()
    }

    pub fn n_control(&self) -> usize {
        self.len() - self.n_treated()
    }

    /// Rows `idx` in the given order. Does not re-validate: subsets of a
    /// valid panel may legitimately contain a single arm.
    pub fn subset(&self, idx: &[usize]) -> PanelDataset<T> {
        let mut l = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            l.extend_from_slice(self.covariates(i));
        }
        PanelDataset {
            y0: idx.iter().map(|&i| self.y0[i]).collect(),
            y1: idx.iter().map(|&i| self.y1[i]).collect(),
            a: idx.iter().map(|&i| self.a[i]).collect(),
            l,
            p: self.p,
        }
    }

    /// Indices of treated (`arm = 1`) or control (`arm = 0`) units.
    pub fn arm_indices(&self, arm: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.a[i] == arm).collect()
    }

    /// Applies `f` to every outcome in both periods.
    pub fn map_outcomes(&self, f: impl Fn(T) -> T) -> PanelDataset<T> {
        PanelDataset {
            y0: self.y0.iter().map(|&y| f(y)).collect(),
            y1: self.y1.iter().map(|&y| f(y)).collect(),
            a: self.a.clone(),
            l: self.l.clone(),
            p: self.p,
        }
    }

    /// Lossless-or-rounding conversion to another scalar type.
    pub fn cast<U: Scalar>(&self) -> PanelDataset<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::lit(x.as_f64())).collect::<Vec<U>>();
        PanelDataset { y0: conv(&self.y0), y1: conv(&self.y1), a: self.a.clone(), l: conv(&self.l), p: self.p }
    }
}

/// Checks the [`PanelDataset`] invariants.
pub fn validate<T: Scalar>(data: &PanelDataset<T>) -> Result<()> {
    let n = data.y0.len();
    if data.y1.len() != n || data.a.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y0 has {n} rows, y1 has {}, a has {}",
            data.y1.len(),
            data.a.len()
        )));
    }
    if data.l.len() != n * data.p {
        return Err(Error::DimensionMismatch(format!(
            "covariate matrix has {} entries, expected {n} x {}",
            data.l.len(),
            data.p
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if let Some(index) = data.a.iter().position(|&a| a > 1) {
        return Err(Error::NonBinaryTreatment { index, value: f64::from(data.a[index]) });
    }
    let check = |field: &'static str, v: &[T], stride: usize| -> Result<()> {
        match v.iter().position(|x| !x.is_finite()) {
            Some(pos) => Err(Error::NonFiniteValue { field, index: pos / stride.max(1) }),
            None => Ok(()),
        }
    };
    check("y0", &data.y0, 1)?;
    check("y1", &data.y1, 1)?;
    check("l", &data.l, data.p)?;
    let treated = data.n_treated();
    if treated == 0 || treated == n {
        return Err(Error::DegenerateArm { treated, control: n - treated });
    }
    Ok(())
}

/// Serializable description of a step-or-smooth moment function `g~(x, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GTildeDescriptor {
    /// `g~(x, theta) = x - theta`: the counterfactual mean of the treated.
    Mean,
    /// `g~(x, theta) = 1{x < y} - theta`: the counterfactual CDF at `y`.
    Cdf { y: f64 },
    /// `g~(x, theta) = 1{x < theta} - tau`: the counterfactual `tau`-quantile.
    Quantile { tau: f64 },
}

/// Target of estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimandSpec {
    Att,
    Cdt { y: f64 },
    Qtt { tau: f64 },
    General { gtilde: GTildeDescriptor },
}

impl EstimandSpec {
    pub fn check(&self) -> Result<()> {
        let tau_ok = |tau: f64| tau > 0.0 && tau < 1.0;
        match self {
            EstimandSpec::Att | EstimandSpec::General { gtilde: GTildeDescriptor::Mean } => Ok(()),
            EstimandSpec::Cdt { y } | EstimandSpec::General { gtilde: GTildeDescriptor::Cdf { y } } => {
                if y.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("CDT evaluation point must be finite, got {y}")))
                }
            }
            EstimandSpec::Qtt { tau } | EstimandSpec::General { gtilde: GTildeDescriptor::Quantile { tau } } => {
                if tau_ok(*tau) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("quantile level must lie in (0, 1), got {tau}")))
                }
            }
        }
    }
}
