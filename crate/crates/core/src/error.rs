use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsafe rule, variable ?{var} not bound by a positive literal: {rule}")]
    Unsafe { var: String, rule: String },
    #[error("relation {0} is classified more than once (static fact, dynamic fact, rule)")]
    Classification(String),
    #[error("board extension: {0}")]
    Board(String),
    #[error("undefined relation {0}")]
    Undefined(String),
    #[error("compile error: {0}")]
    Compile(String),
    #[error("illegal move {mv} for role {role}")]
    IllegalMove { role: String, mv: String },
    #[error("unknown role {0}")]
    UnknownRole(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
