use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnowledgeError {
    #[error("coordinates {0:?} outside the board")]
    OutOfBounds(Vec<f64>),
    #[error("xml: {0}")]
    Xml(String),
    #[error("unknown element <{0}>")]
    UnknownElement(String),
    #[error("<{0}> lacks a weight attribute")]
    MissingWeight(String),
    #[error("malformed number {text:?} in <{element}>")]
    BadNumber { element: String, text: String },
    #[error("missing <{child}> in <{parent}>")]
    Missing { parent: String, child: String },
    #[error("invalid {0}")]
    Invalid(String),
    #[error("empty move list")]
    NoMoves,
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, KnowledgeError>;
