use thiserror::Error;

/// Failures of a run, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("task failed: {0}")]
    Task(String),

    #[error("refused: {0}")]
    Refusal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Task(_) | CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Refusal(_) => 3,
        }
    }
}

impl From<mdlab::Error> for CliError {
    fn from(e: mdlab::Error) -> Self {
        use mdlab::Error as E;
        match e {
            E::Precision(_) | E::Capacity(_) | E::InsufficientData(_) => CliError::Refusal(e.to_string()),
            E::InvalidParameter { .. } | E::Domain { .. } | E::Model(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
