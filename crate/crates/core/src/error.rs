use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable overflow in {op}: argument bound {bound} exceeds the representable range")]
    Overflow { op: &'static str, bound: f64 },
    #[error("point {point} outside box [{lo}, {hi}]")]
    PointOutsideBox { point: f64, lo: f64, hi: f64 },
    #[error("mixed evaluation context: subgradient lengths {0} and {1} disagree")]
    MixedContext(usize, usize),
    #[error("tangent point solve did not converge (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("parse error at byte {offset}: expected {}", expected.join(" or "))]
    Parse { offset: usize, expected: Vec<String> },
    #[error("unresolved name `{0}`")]
    UnresolvedName(String),
    #[error("solver aborted in {mode} mode: {cause}")]
    Aborted {
        mode: crate::relax::ActivationMode,
        cause: Box<Error>,
    },
    #[error("i/o error on {path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            msg: err.to_string(),
        }
    }

    pub fn is_overflow(&self) -> bool {
        match self {
            Error::Overflow { .. } => true,
            Error::Aborted { cause, .. } => cause.is_overflow(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
