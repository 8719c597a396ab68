use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations; exit status 1.
    #[error("{0}")]
    Usage(String),

    /// Unreadable or malformed input files, failed computations; exit status 2.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<gagt::Error> for CliError {
    fn from(e: gagt::Error) -> Self {
        match e {
            gagt::Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
