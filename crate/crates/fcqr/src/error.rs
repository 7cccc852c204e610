use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Error, Debug)]
pub enum FcqrError {
    /// A parameter violates its contract (out-of-range order, bad level count, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation point or grid falls outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The supplied data is malformed (non-finite values, inconsistent grids, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A numerical routine failed (singular matrix, degenerate sample, ...).
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, FcqrError>;
