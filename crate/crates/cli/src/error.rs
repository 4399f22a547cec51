use std::path::PathBuf;

use causal_tradeoff::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("invalid roles: {0}")]
    Roles(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 infeasible or degenerate input, 3 I/O or
    /// schema problems, 4 numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                CoreError::Infeasible { .. }
                | CoreError::ZeroVariance { .. }
                | CoreError::TooShort { .. }
                | CoreError::NotCentered { .. }
                | CoreError::RankDeficient { .. }
                | CoreError::NoCovariates
                | CoreError::NotDerived(_)
                | CoreError::EmptyGrid => 2,
                CoreError::NonFinite { .. }
                | CoreError::LengthMismatch { .. }
                | CoreError::MissingColumn(_)
                | CoreError::InvalidSpec(_)
                | CoreError::InvalidPlan(_) => 3,
                CoreError::Collinear { .. }
                | CoreError::WeakDenominator { .. }
                | CoreError::DegenerateDenominator { .. }
                | CoreError::TooManyFailures { .. } => 4,
            },
            _ => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
