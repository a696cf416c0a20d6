use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pulse support [{lo}, {hi}] is not strictly inside (-1, 0)")]
    InvalidSupport { lo: f64, hi: f64 },

    #[error("invalid data parameters: {0}")]
    InvalidParams(String),

    #[error("root solve failed at s = {s}: residual {residual:e} after {iterations} iterations")]
    RootSolveFailure {
        s: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("degenerate Jacobian 1 + delta^k phi1^p / 2 = {jacobian} at s = {s}")]
    DegenerateJacobian { s: f64, jacobian: f64 },

    #[error("pulse under-resolved: {cells:.1} cells across delta, need at least {required}")]
    ResolutionError { cells: f64, required: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("hyperbolicity lost at t = {t}, r = {r}: 1 + phit^p = {value}")]
    HyperbolicityLoss { t: f64, r: f64, value: f64 },

    #[error("non-finite values at t = {t}")]
    NumericalBreakdown { t: f64 },

    #[error("solution history does not cover t = {t}, r = {r}")]
    HistoryGap { t: f64, r: f64 },

    #[error("nonpositive value {value} at t = {t} inside fit window")]
    FitDomainError { t: f64, value: f64 },

    #[error("fit needs at least {required} samples in window, found {found}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("sweep runs disagree on {0}")]
    MixedSweepError(String),

    #[error("run is not smooth before probe time {probe}: guard fired at t = {fired_at}")]
    NotSmoothError { probe: f64, fired_at: f64 },

    #[error("config error at line {line}: {message}")]
    ConfigError { line: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("malformed input {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::ConfigError {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
