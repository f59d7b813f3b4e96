use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: line {line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{context}{source}")]
    Core {
        context: String,
        #[source]
        source: radgauss::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config { .. } => exit::USAGE,
            Self::Io { .. } => exit::IO,
            Self::Core { source, .. } => match source {
                radgauss::Error::Divergence { .. }
                | radgauss::Error::NearOrigin { .. }
                | radgauss::Error::Rank { .. } => exit::NUMERICAL,
                _ => exit::USAGE,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a core error with the file or stage it came from.
    pub fn core(context: impl Into<String>, source: radgauss::Error) -> Self {
        let mut context = context.into();
        if !context.is_empty() {
            context.push_str(": ");
        }
        Self::Core { context, source }
    }
}

impl From<radgauss::Error> for HarnessError {
    fn from(source: radgauss::Error) -> Self {
        Self::core("", source)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
