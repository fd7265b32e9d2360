use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("invalid policy parameters: {0}")]
    InvalidParams(String),
    #[error("operation requires a non-empty schedule")]
    EmptySchedule,
    #[error("operation requires a non-empty buffer")]
    EmptyBuffer,
    #[error("brute-force oracle supports at most {limit} packets, got {got}")]
    SizeLimit { limit: usize, got: usize },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("chain premise violated: {0}")]
    ChainPremise(String),
    #[error("alpha must be greater than 1, got {0}")]
    ChainDomain(f64),
    #[error("provisional schedule order violated at t={time}: {detail}")]
    SlackOrder { time: i64, detail: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
