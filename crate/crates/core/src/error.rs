use num_complex::Complex64;
use thiserror::Error;

use crate::tomography::MleFit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dagger| entry = {max_deviation:e})")]
    NonHermitian { max_deviation: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {left}x{left} vs {right}x{right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("POVM has no effects")]
    EmptyPovm,

    #[error("effect {index} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },

    #[error("effects do not sum to identity (operator-norm deviation {deviation:e})")]
    NotComplete { deviation: f64 },

    #[error("density matrix invalid: {reason}")]
    InvalidState { reason: String },

    #[error("probability vector invalid: {reason}")]
    InvalidProbabilities { reason: String },

    #[error("ideal measurement is not a projective measurement in the computational basis")]
    NotProjectiveIdeal,

    #[error("column {column} of the extracted stochastic matrix deviates from unit sum by {deviation:e}")]
    ColumnSumViolation { column: usize, deviation: f64 },

    #[error("matrix is not stochastic: {reason}")]
    NotStochastic { reason: String },

    #[error("stochastic matrix is singular (condition estimate {condition_estimate:e})")]
    Singular { condition_estimate: f64 },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("{outcomes} outcomes exceed the exhaustive enumeration cap of {cap}")]
    TooManyOutcomes { outcomes: usize, cap: usize },

    #[error("bad preparation label {0:?}")]
    BadLabel(String),

    #[error("probe states do not span the operator space (rank {rank} < {required})")]
    RankDeficient { rank: usize, required: usize },

    #[error("MLE did not converge after {} iterations (last step {:e})", .0.diagnostics.iterations, .0.diagnostics.final_change)]
    NotConverged(Box<MleFit>),

    #[error("quasi-probability vector sums to {sum}, not 1")]
    SumViolation { sum: f64 },

    #[error("off-diagonal term {z} gives an invalid POVM: {source}")]
    InvalidPovm {
        z: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotConverged(_)
                | Error::RankDeficient { .. }
                | Error::ColumnSumViolation { .. }
                | Error::TooManyOutcomes { .. }
        )
    }
}
