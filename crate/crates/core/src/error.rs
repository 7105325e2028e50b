use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A schedule was evaluated below its smallest admissible index.
    #[error("index {k} is below the schedule's k_min = {k_min}")]
    Domain { k: u64, k_min: u64 },

    /// An operation was called outside its documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Thinning target exceeds the source mean at `k`.
    #[error("thinning target mean {target} exceeds source mean {source_mean} at k = {k}")]
    ThinningTarget {
        k: u64,
        target: f64,
        source_mean: f64,
    },

    /// A combinatorial search was asked to handle more than it can.
    #[error("capacity exceeded: {what} (size {size}, limit {limit})")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    /// Blocks requested from a sample that does not cover them.
    #[error("sample range does not cover blocks {0:?}")]
    MissingBlocks(Vec<u32>),

    /// Invalid configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Ergodic mean or density over an empty set.
    #[error("undefined mean: {0}")]
    Undefined(String),

    /// A numerical routine failed a self-check or did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
