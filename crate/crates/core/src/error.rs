use thiserror::Error;

use crate::chanfactory::PocsTrace;
use crate::linalg::CMat;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("not a CP map: Choi matrix has eigenvalue {0:.3e}")]
    NotCp(f64),

    #[error("state is not normalized (norm {0})")]
    Normalization(f64),

    #[error("infeasible point: {0}")]
    Feasibility(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("retraction failed: {0}")]
    Retraction(String),

    #[error("projection failed: {0}")]
    Projection(String),

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("numerical failure: {message}")]
    NumericalFailure {
        message: String,
        iterate: Option<Box<CMat>>,
    },

    #[error("alternating projections did not converge after {} iterations", .0.iterations)]
    NonConvergence(Box<PocsTrace>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, iterate: Option<&CMat>) -> Self {
        Error::NumericalFailure {
            message: message.into(),
            iterate: iterate.map(|m| Box::new(m.clone())),
        }
    }
}
