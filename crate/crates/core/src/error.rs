use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("shift z = {0} is outside the resolvent set (must be > 0)")]
    NonPositiveShift(f64),

    #[error("reflection r -> -r does not map grid nodes to nodes (offset {offset})")]
    ReflectionIncompatible { offset: f64 },

    #[error("iterative solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error(
        "operator is not positive definite (curvature {curvature:.3e}); coupling may exceed the stability threshold"
    )]
    Indefinite { curvature: f64 },

    #[error("lanczos failed after {restarts} restarts")]
    LanczosBreakdown { restarts: usize },

    #[error("potential evaluated at its singular point r = 0")]
    SingularPoint,

    #[error("sup V(r)|r|^2 diverges (still growing at scan boundary r = {radius:.3e})")]
    DivergentConstant { radius: f64 },

    #[error("quadrature did not converge (last relative change {change:.3e})")]
    Integrability { change: f64 },

    #[error("coupling schedule invalid at eps = {eps}: {reason}")]
    InvalidSchedule { eps: f64, reason: String },

    #[error("calibration bracket failure: target {target}, energies at bracket ends {low_energy} and {high_energy}")]
    BracketFailure {
        target: f64,
        low_energy: f64,
        high_energy: f64,
    },

    #[error("grid of {nodes} nodes exceeds the memory cap of {cap} nodes")]
    MemoryCap { nodes: usize, cap: usize },

    #[error("insufficient data: {available} usable points, need at least {required}")]
    InsufficientData { available: usize, required: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    ConfigField { field: String, message: String },

    #[error("table potential parse error at line {line}: {message}")]
    TableParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
