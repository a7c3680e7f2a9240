//! Changes-in-changes estimation of treated-population causal effects.
//!
//! The crate identifies counterfactual untreated outcomes of treated units
//! through the quantile-quantile transport map
//!
//! ```text
//! gamma(y, l) = Q_{Y1 | A=0, L=l}( F_{Y0 | A=0, L=l}(y) )
//! ```
//!
//! and estimates the ATT, the counterfactual distribution of the treated
//! (CDT) and quantile treatment effects on the treated (QTT) in two ways:
//!
//! * plug-in evaluation of the identification formulas ([`estimator::plugin_att`] and friends);
//! * cross-fitted, repeated, median-adjusted solutions of the efficient
//!   influence function estimating equations ([`estimator::estimate`]).
//!
//! Simulation designs with exact oracle truth live in [`dgp`]; executable
//! checks of the orthogonality and second-order bias structure of the
//! estimating function live in [`validation`].
//!
//! All numerical code is generic over the floating point type ([`Scalar`]);
//! the `f64` aliases at the crate root cover the common case.

// `!(x > 0)` is the NaN-rejecting form used for parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dgp;
pub mod eif;
pub mod error;
pub mod estimator;
pub mod fold;
pub mod kernel;
pub mod normal;
pub mod nuisance;
pub mod quadrature;
pub mod scalar;
pub mod validation;

pub use data::{validate, EstimandSpec, GTildeDescriptor, Observation, PanelDataset};
pub use error::{Error, Result};
pub use fold::{partition_folds, FoldAssignment};
pub use scalar::Scalar;

/// Double-precision panel.
pub type Dataset = data::PanelDataset<f64>;
/// Single-precision panel.
pub type Dataset32 = data::PanelDataset<f32>;
/// Double-precision fitted nuisances.
pub type Nuisances = nuisance::NuisanceSet<f64>;
/// Double-precision cross-fitting report.
pub type Report = estimator::EstimateReport<f64>;
/// Double-precision estimand moment function.
pub type Moment = eif::GTilde<f64>;
