use thiserror::Error;

/// Errors raised by the solvers, generators and verifiers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// The column `index` is (numerically) in the span of the columns already
    /// selected.
    #[error("column {index} is linearly dependent on the current support")]
    SingularSupport { index: usize },

    #[error("combinatorial budget exceeded: C({n}, {l}) = {required} subsets, limit {limit}")]
    Budget {
        n: usize,
        l: usize,
        required: u128,
        limit: u128,
    },

    #[error("missing restricted isometry constant for L = {0}")]
    MissingConstant(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("image: {0}")]
    Image(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
