use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for truncation {truncation}")]
    IndexOutOfRange { index: usize, truncation: usize },

    #[error("parameter outside its domain: {0}")]
    DomainError(String),

    #[error("tail amplitude {tail:.3e} exceeds {tol:.1e} relative to the peak; raise the truncation")]
    TailOverflow { tail: f64, tol: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian is numerically singular (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("no branch '{branch}' at {mode} mode, m = {m}")]
    UnknownBranch { mode: String, m: usize, branch: String },

    #[error("truncation {have} too small, need at least {need}")]
    TruncationTooSmall { have: usize, need: usize },

    #[error("constrained index undefined: L+ has {z_plus} zero eigenvalue(s)")]
    IndeterminateIndex { z_plus: usize },

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("at parameter {param}: {source}")]
    AtParameter { param: f64, source: Box<Error> },

    #[error("symmetric eigensolver failed to converge for eigenvalue {index}")]
    NoConvergenceEig { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
