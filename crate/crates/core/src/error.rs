use thiserror::Error;

/// A parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),

    #[error("directed cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("value `{value}` is not in the domain of `{var}`")]
    UnknownValue { var: String, value: String },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("variable sets overlap: {0}")]
    OverlappingSets(String),

    #[error("not identified: intervened variable `{var}` is confounded ({edge})")]
    NotIdentified { var: String, edge: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("outcome space of {size} exceeds the cap of {cap}")]
    OutcomeSpaceTooLarge { size: u128, cap: u128 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid expression: {0}")]
    InvalidExpression(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
