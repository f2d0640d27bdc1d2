use std::fmt;

/// Failure of a subcommand, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Solver(String),
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Assertion(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
        }
    }
}

impl From<knnfl::Error> for CliError {
    fn from(e: knnfl::Error) -> Self {
        match e {
            knnfl::Error::SolverFailure { .. } => CliError::Solver(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
