use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, the oracle and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("{what}: estimated cost {estimated} exceeds limit {limit}")]
    CostGuard {
        what: &'static str,
        estimated: f64,
        limit: f64,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
