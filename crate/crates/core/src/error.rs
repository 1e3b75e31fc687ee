use thiserror::Error;

/// Errors raised by the model, simulator and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A radio, processing or platform parameter is out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// A function argument violates its precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A workload specification cannot generate tasks.
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    /// A workload or instance file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
