use std::path::{Path, PathBuf};

/// Failures surfaced by the command-line tools, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: npc_core::Error,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invariant(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingArtifact(path.to_path_buf())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, context: impl Into<String>) -> CliResult<T>;
}

impl<T> Context<T> for npc_core::Result<T> {
    fn context(self, context: impl Into<String>) -> CliResult<T> {
        self.map_err(|source| CliError::Model {
            context: context.into(),
            source,
        })
    }
}
