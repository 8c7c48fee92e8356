use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("order parameter has zero magnitude, its argument is undefined")]
    UndefinedArgument,

    #[error("singular reduced jacobian at newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("newton did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },

    #[error("invalid node subset: {0}")]
    InvalidSubset(String),

    #[error("exhaustive cut search supports at most {max} nodes, network has {n}")]
    SizeCap { n: usize, max: usize },

    #[error("root is not bracketed on [{lo}, {hi}]")]
    RootBracket { lo: f64, hi: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("certificate check failed: {}", .0.join("; "))]
    CertificateFailure(Vec<String>),
}
