use thiserror::Error;

use crate::alternation::ValidationReport;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("subset {subset} is not contained in a ground set of size {m}")]
    InvalidSubset { subset: String, m: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ground set of size {m} exceeds the cap of {cap}")]
    TooLarge { m: usize, cap: usize },

    #[error("not a completely alternating extremal coefficient function ({} violations)", .0.violations.len())]
    NotCompletelyAlternating(Box<ValidationReport>),

    #[error("singleton capacity is zero")]
    DegenerateMarginal,

    #[error("bound {bound} is smaller than theta(M) = {theta_full}")]
    BoundTooSmall { bound: f64, theta_full: f64 },

    #[error("Bernstein function takes the same value at 0 and 1")]
    DegenerateTransform,

    #[error("only {count} exceedances of the threshold, at least {required} are required")]
    InsufficientExceedances { count: usize, required: usize },

    #[error("{0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn file_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
