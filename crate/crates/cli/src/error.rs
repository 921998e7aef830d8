use thiserror::Error;

/// Failures of a command, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error(transparent)]
    Numerical(#[from] ymbubble::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::ChecksFailed(_) => 1,
            Self::Config(_) => 2,
            // Argument errors from the library come from configured values.
            Self::Numerical(ymbubble::Error::InvalidArgument(_)) => 2,
            Self::Numerical(_) | Self::Io { .. } => 3,
        }
    }
}
