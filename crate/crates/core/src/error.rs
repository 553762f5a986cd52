use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-range input.
    #[error("input error: {0}")]
    Input(String),

    /// Query arity or kind does not match the operation.
    #[error("query error: {0}")]
    Query(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested size exceeds an enumeration or representation cap.
    #[error("capacity exceeded: {what} requires n <= {cap}, got {got}")]
    Capacity { what: String, cap: usize, got: usize },

    /// The model cannot decide the query (e.g. direction between unconnected nodes).
    #[error("model outside class: {0}")]
    ModelOutsideClass(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("correlation {corr} is below the sign threshold {threshold}")]
    DegenerateSign { corr: f64, threshold: f64 },

    #[error("inconsistent marginals: {detail} (distance {distance:e} > tol {tol:e})")]
    Inconsistency {
        detail: String,
        distance: f64,
        tol: f64,
    },

    #[error("mean over an empty query list is undefined")]
    UndefinedMean,

    #[error("no finite solution: {0}")]
    Divergence(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Inconsistency { .. } | Error::Capacity { .. } | Error::Divergence(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn query(msg: impl Into<String>) -> Self {
        Error::Query(msg.into())
    }

    pub(crate) fn capacity(what: impl Into<String>, cap: usize, got: usize) -> Self {
        Error::Capacity {
            what: what.into(),
            cap,
            got,
        }
    }
}
