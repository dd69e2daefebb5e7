use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("record: {0}")]
    Record(String),
    #[error(transparent)]
    Knowledge(#[from] ggp_knowledge::KnowledgeError),
    #[error(transparent)]
    Game(#[from] ggp_core::Error),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("no records produced in generation {0}")]
    NoRecords(usize),
}

impl From<std::io::Error> for LearnError {
    fn from(e: std::io::Error) -> Self {
        LearnError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LearnError>;
