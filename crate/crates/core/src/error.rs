use thiserror::Error;

/// Errors raised across the kernel, metric, solver and density modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("quadrature did not converge: {0}")]
    Accuracy(String),
    #[error("evaluation at r = {r} beyond grid radius {r_max}")]
    Range { r: f64, r_max: f64 },
    #[error("unsupported characteristic function variant: {0}")]
    Variant(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("collision integral diverges: {0}")]
    Divergence(String),
    #[error("Picard iteration did not converge after {iterations} iterations (measured contraction factor {factor:.4e})")]
    Convergence { iterations: usize, factor: f64 },
    #[error("explicit step unstable at t = {t}: {reason}")]
    StepSize { t: f64, reason: String },
    #[error("verification failed at t = {t}: {what} ratio {ratio:.6} exceeds {limit}")]
    Verification { t: f64, what: String, ratio: f64, limit: f64 },
    #[error("density reconstruction refused: {0}")]
    Inversion(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
