use std::path::PathBuf;

use iontrap::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: Error },
    #[error(transparent)]
    Physics(#[from] Error),
}

impl CliError {
    /// 1 for a physics failure, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Io { .. } | Self::File { .. } => 2,
            Self::Physics(e) => match e {
                Error::Parse { .. } | Error::Validation(_) | Error::UnknownSpecies(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
