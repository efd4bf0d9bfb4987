use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("no root region: E log rho = {e_log_rho} is not negative")]
    NoRootRegion { e_log_rho: f64 },
    #[error("environment is not transient to the right (E log rho = {e_log_rho})")]
    NotTransient { e_log_rho: f64 },
    #[error("E xi is infinite (strongly sparse environment)")]
    InfiniteMeanXi,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("insufficient tail: {0}")]
    InsufficientTail(String),
    #[error("non-positive sample value {0}")]
    NonpositiveSample(f64),
    #[error("perpetuity series not truncated within {0} terms")]
    TruncationCap(usize),
    #[error("missing estimate: {0}")]
    MissingEstimate(String),
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("misconfigured experiment: {0}")]
    Misconfigured(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam(_)
            | Error::Misconfigured(_)
            | Error::Json(_)
            | Error::UnsupportedCase(_)
            | Error::MissingEstimate(_)
            | Error::NotTransient { .. }
            | Error::InfiniteMeanXi
            | Error::NoRootRegion { .. }
            | Error::PreconditionViolated(_) => 2,
            _ => 3,
        }
    }
}
