use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("number of modes must be at least 1")]
    ZeroModes,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension {0} is odd; phase-space matrices are 2M x 2M")]
    OddDimension(usize),

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),

    #[error("symplecticity defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    SymplecticDefect { defect: f64, tol: f64 },

    #[error("unphysical covariance matrix: symplectic eigenvalue {0:.12} < 1")]
    Unphysical(f64),

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("invalid mode partition: {0}")]
    InvalidPartition(String),

    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),

    #[error("normal mode with zero frequency; thermal state is not normalizable")]
    ZeroFrequencyMode,

    #[error("relative entropy evaluated to {0:.3e} < 0 beyond tolerance")]
    NegativeRelativeEntropy(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("tail rescale factor {0:.4} for the last spacing is outside [0.1, 10]")]
    PathologicalTail(f64),

    #[error("time {t} outside protocol range [0, {t_d}]")]
    TimeOutOfRange { t: f64, t_d: f64 },

    #[error("step refinement did not converge after {0} halvings")]
    RefinementNotConverged(u32),

    #[error("eigen-decomposition did not converge")]
    EigenFailure,

    #[error("williamson decomposition failed: {0}")]
    Williamson(String),

    #[error("quadrature did not converge: estimate {value:.6e} with error {error:.3e}")]
    Quadrature { value: f64, error: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
