use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: blockade_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// Process exit status: 1 config, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    /// Attach scenario context to a core error. Input problems the core
    /// only detects late (bad dimensions, domains) count as config errors.
    pub fn from_core(context: impl Into<String>, source: blockade_core::Error) -> Self {
        let context = context.into();
        if source.is_numerical() {
            CliError::Numerical { context, source }
        } else {
            CliError::Config(format!("{context}: {source}"))
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
