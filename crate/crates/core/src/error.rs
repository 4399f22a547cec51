use thiserror::Error;

/// Errors raised across the estimation, scenario and sensitivity layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("column `{column}` has zero variance")]
    ZeroVariance { column: String },

    #[error("column `{column}` has {len} rows; at least {min} are required")]
    TooShort { column: String, len: usize, min: usize },

    #[error("column `{column}` contains a non-finite value at row {row}")]
    NonFinite { column: String, row: usize },

    #[error("column `{column}` has {found} rows, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },

    #[error("column `{column}` is not centered (mean {mean:e})")]
    NotCentered { column: String, mean: f64 },

    #[error("design matrix is numerically singular (condition number {condition:e})")]
    Collinear { condition: f64 },

    #[error("instrument is irrelevant: first-stage pivot {pivot:e} below tolerance")]
    WeakDenominator { pivot: f64 },

    #[error("{instruments} instrument(s) cannot identify {endogenous} endogenous regressor(s)")]
    RankDeficient { instruments: usize, endogenous: usize },

    #[error("infeasible scenario: {constraint} = {value} (must be at least 1e-6)")]
    Infeasible { constraint: String, value: f64 },

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error("{0} has no closed form")]
    NotDerived(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("at least one covariate is required for benchmarking")]
    NoCovariates,

    #[error("denominator factor {factor} is degenerate ({value:e})")]
    DegenerateDenominator { factor: String, value: f64 },

    #[error("{failures} replications failed numerically, cap is {cap}")]
    TooManyFailures { failures: usize, cap: usize },

    #[error("no feasible cell in the requested grid")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
