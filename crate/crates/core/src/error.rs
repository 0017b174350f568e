use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("derivative evaluation produced a non-finite value at index {index}")]
    DerivativeEvaluation { index: usize },

    #[error("could not draw a regular sample after {retries} retries")]
    Sampling { retries: usize },

    #[error("implicit solve did not converge after {iterations} iterations (last residual {residual:e})")]
    ImplicitSolve { iterations: usize, residual: f64 },

    #[error("state diverged")]
    Diverged,

    #[error("singular point: {0}")]
    Singular(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("vector field vanishes at {at} inside the integration range")]
    Pole { at: f64 },

    #[error("singular transform Jacobian (reciprocal condition estimate {rcond:e})")]
    SingularTransform { rcond: f64 },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("reference solver failed to reach relative tolerance {tol:e} (last change {change:e} after {halvings} halvings)")]
    OraclePrecision { halvings: usize, change: f64, tol: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that signal a trajectory left the region where the
    /// model can be evaluated, as opposed to a misuse of the API.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged | Error::Singular(_))
    }

    /// Process exit code: 2 for configuration problems, 3 when divergence
    /// made an experiment unfulfillable, 4 for internal numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Configuration(_)
            | Error::Argument(_)
            | Error::Parameter(_)
            | Error::Domain(_)
            | Error::Precondition(_)
            | Error::Capability(_)
            | Error::Dimension { .. }
            | Error::Io(_) => 2,
            Error::Experiment(_) | Error::Diverged | Error::Singular(_) => 3,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
