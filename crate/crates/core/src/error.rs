use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line impedance is zero")]
    SingularCircuit,

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("no operating point after {iterations} iterations (residual {residual:.3e})")]
    NoOperatingPoint { iterations: usize, residual: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("characteristic polynomial is identically zero")]
    DegenerateModel,

    #[error("root finding did not converge after {iterations} iterations")]
    RootFindingFailed {
        iterations: usize,
        best: Vec<Complex64>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
