use crate::error::{Error, Result};
use crate::nuisance::cdf::CondCdf;
use crate::nuisance::quantile::CondQuantile;
use crate::scalar::Scalar;

/// Quantile-quantile transport `(y, l) -> Q1(F0(y | l) | l)`.
#[derive(Debug, Clone)]
pub struct GammaMap<T> {
    cdf: CondCdf<T>,
    quant: CondQuantile<T>,
    /// Both members were fitted on the same covariate rows with the same
    /// bandwidths, so one weight vector serves both.
    shared_weights: bool,
}

pub fn compose_gamma<T: Scalar>(cdf: CondCdf<T>, quant: CondQuantile<T>) -> Result<GammaMap<T>> {
    if cdf.p() != quant.p() {
        return Err(Error::DimensionMismatch(format!(
            "baseline CDF has {} covariates, period-1 quantile has {}",
            cdf.p(),
            quant.p()
        )));
    }
    let shared_weights = match (cdf.kernel(), quant.cdf().kernel()) {
        (Some(a), Some(b)) => a.points() == b.points() && a.bandwidths() == b.bandwidths(),
        _ => false,
    };
    Ok(GammaMap { cdf, quant, shared_weights })
}

impl<T: Scalar> GammaMap<T> {
    pub fn p(&self) -> usize {
        self.cdf.p()
    }

    pub fn cdf(&self) -> &CondCdf<T> {
        &self.cdf
    }

    pub fn quantile(&self) -> &CondQuantile<T> {
        &self.quant
    }

    pub fn eval(&self, y: T, l: &[T]) -> T {
        if self.p() == 0 {
            return self.quant.eval(self.cdf.eval(y, l), l);
        }
        let mut w = Vec::with_capacity(self.cdf.len());
        self.cdf.weights(l, &mut w);
        let u = self.cdf.eval_weighted(y, &w);
        if self.shared_weights {
            self.quant.eval_weighted(u, &w)
        } else {
            self.quant.eval(u, l)
        }
    }
}
