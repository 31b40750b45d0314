use thiserror::Error;

/// Errors produced by table ingestion, structural probes, and counting.
///
/// The variants are grouped by how a front end should treat them:
/// validation problems (bad input data), budget refusals (the request is
/// well-formed but too large for the configured limits), and internal
/// consistency failures (a proved statement did not hold at runtime, which
/// always indicates a bug somewhere upstream).
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("symbol {found} out of range 1..={n} (line {line})")]
    SymbolRange { found: i64, n: usize, line: usize },

    #[error("row {index} repeats symbol {symbol}")]
    LatinRow { index: usize, symbol: usize },

    #[error("column {index} repeats symbol {symbol}")]
    LatinColumn { index: usize, symbol: usize },

    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("table has no identity element, a loop is required")]
    NotALoop,

    #[error("not a group: {0}")]
    NotAGroup(String),

    #[error("budget exceeded: {what} needs {required}, limit is {limit}")]
    Budget {
        what: String,
        required: String,
        limit: String,
    },

    #[error("internal consistency violated: {0}")]
    Internal(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by malformed or invalid input data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::SymbolRange { .. }
                | Error::LatinRow { .. }
                | Error::LatinColumn { .. }
                | Error::OrderMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::NotALoop
                | Error::NotAGroup(_)
                | Error::Cache(_)
        )
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }

    pub(crate) fn budget(
        what: impl Into<String>,
        required: impl ToString,
        limit: impl ToString,
    ) -> Self {
        Error::Budget {
            what: what.into(),
            required: required.to_string(),
            limit: limit.to_string(),
        }
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
