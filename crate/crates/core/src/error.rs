use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An axis, index or interval lies outside the tensor.
    #[error("range error: {0}")]
    Range(String),

    /// Shapes or dimensions are incompatible, or a certificate is malformed.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The brute-force contraction oracle refuses instances above its size cap.
    #[error("refused: {0}")]
    Refused(String),

    /// A search ran out of budget before reaching a decision.
    #[error("undecided: {0}")]
    Undecided(String),

    /// A checked construction produced an output that violates its own claim.
    #[error("verification failure: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
