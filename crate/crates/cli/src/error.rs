use thiserror::Error;

/// Command failure, classified by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model protocol error: {0}")]
    Protocol(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Protocol(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<xmeter_core::Error> for CliError {
    fn from(e: xmeter_core::Error) -> Self {
        use xmeter_core::Error as E;
        match e {
            E::ModelProtocol(m) => CliError::Protocol(m),
            E::UndefinedCorrelation(m) => CliError::Numeric(m),
            E::Contract(m) | E::Unsupported(m) => CliError::Config(m),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
