use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("excitation overflow: |c1|^2 + |c2|^2 = {population} exceeds 1")]
    ExcitationOverflow { population: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("matrix has trace {trace}, expected {expected}")]
    BadTrace { trace: f64, expected: f64 },

    #[error("negative eigenvalue {value:e} beyond tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("trajectory has no sensitivity track for parameter `{0}`")]
    MissingSensitivity(String),

    #[error("trajectories do not share a time grid")]
    GridMismatch,

    #[error("index {index} out of range for trajectory of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("negative Fisher information {0:e}: sensitivities are inconsistent")]
    NegativeFisher(f64),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter { .. } | Error::InvalidPovm(_) | Error::MissingSensitivity(_)
        )
    }
}
