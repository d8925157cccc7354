use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    /// Final runs that diverged; their partial outputs were written.
    #[error("{} run(s) diverged: {}", .0.len(), .0.join(", "))]
    Divergence(Vec<String>),

    #[error(transparent)]
    Library(#[from] cqmarina::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: &str, message: impl std::fmt::Display) -> Self {
        if key.is_empty() || key == "." {
            CliError::Config(message.to_string())
        } else {
            CliError::Config(format!("{key}: {message}"))
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for configuration problems, 3 for divergence, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Library(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
