use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed tensor container: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Conjugate gradient did not reach the requested relative residual.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    /// A dip whose penetration weights vanish at feature resolution.
    #[error("selection has zero total weight")]
    EmptySelection,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("nothing to undo")]
    NothingToUndo,

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
