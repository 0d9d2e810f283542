use std::path::PathBuf;

use opstat_core::Error as CoreError;

/// Failures of a command, tagged with the stage that raised them.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    /// 3 for numerical capacity or precision failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_numerical() => 3,
            _ => 2,
        }
    }

    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Attaches a stage tag to core errors.
pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, CoreError> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { stage, source })
    }
}
