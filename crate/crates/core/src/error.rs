use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("treatment indicator at row {index} is {value}; expected 0 or 1")]
    NonBinaryTreatment { index: usize, value: f64 },

    #[error("degenerate treatment arm: {treated} treated and {control} control units")]
    DegenerateArm { treated: usize, control: usize },

    #[error("non-finite value in `{field}` at row {index}")]
    NonFiniteValue { field: &'static str, index: usize },

    #[error("cannot split {n} units into {k} folds")]
    FoldTooSmall { n: usize, k: usize },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("adaptive quadrature did not reach tolerance on [{lo}, {hi}]")]
    QuadratureNonConvergence { lo: f64, hi: f64 },

    #[error("quantile influence function requires fitted densities")]
    MissingDensity,

    #[error("influence function denominator is zero")]
    ZeroDenominator,

    #[error("evaluation sample contains no treated units")]
    NoTreatedInEvaluation,

    #[error("estimating function does not change sign on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}
