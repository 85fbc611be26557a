use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: probability out of range: {value}")]
    ProbabilityOutOfRange { line: usize, value: f64 },

    #[error("duplicate edge ({source_node}, {target})")]
    DuplicateEdge { source_node: usize, target: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("node {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("invalid cost for node {node}: {value}")]
    InvalidCost { node: usize, value: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("instance too large for exact backend: {0}")]
    TooLarge(String),

    #[error("infeasible budget: {0}")]
    Budget(String),

    #[error("node {0} is already a seed")]
    AlreadySeed(usize),

    #[error("{0}")]
    Unsupported(String),

    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable code used by the CLI error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::ProbabilityOutOfRange { .. } => "probability",
            Error::DuplicateEdge { .. } => "duplicate-edge",
            Error::SelfLoop(_) => "self-loop",
            Error::NodeOutOfRange { .. } => "node-range",
            Error::InvalidCost { .. } => "cost",
            Error::InvalidArgument(_) => "argument",
            Error::TooLarge(_) => "guard",
            Error::Budget(_) => "budget",
            Error::AlreadySeed(_) => "already-seed",
            Error::Unsupported(_) => "unsupported",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
