use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of its valid domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// The caller passed arguments that do not fit together (bad index,
    /// unpaired tables, missing time assignment, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("assignment error: {0}")]
    Assignment(String),

    /// C1/C2 conflict: the node cannot reach its sensitivity threshold even
    /// at maximum power, so no rate target is feasible.
    #[error(
        "structurally infeasible: node {node} on channel {channel} needs {required_mw:.6e} mW \
         received but reaches at most {reachable_mw:.6e} mW"
    )]
    StructurallyInfeasible {
        channel: usize,
        node: usize,
        required_mw: f64,
        reachable_mw: f64,
    },

    #[error("fixed-point iteration did not settle after {sweeps} sweeps on channel {channel}")]
    NumericalFailure { channel: usize, sweeps: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
