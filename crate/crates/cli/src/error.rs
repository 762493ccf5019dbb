use std::path::PathBuf;

use matxai_core::distill::DistillError;
use matxai_core::intgrad::IgError;
use matxai_core::models::ModelError;
use matxai_core::shapley::ShapleyError;
use thiserror::Error;

/// Process exit code for bad files, unparsable input and invalid arguments.
pub const EXIT_INPUT: i32 = 2;
/// Process exit code for an unregularized division by a vanishing spectrum.
pub const EXIT_SINGULAR: i32 = 3;
/// Process exit code for games with too many players.
pub const EXIT_TOO_MANY_PLAYERS: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("{0} (try --lambda with a small positive value)")]
    SingularSpectrum(String),

    #[error("{0}")]
    TooManyPlayers(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SingularSpectrum(_) => EXIT_SINGULAR,
            CliError::TooManyPlayers(_) => EXIT_TOO_MANY_PLAYERS,
            _ => EXIT_INPUT,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl From<DistillError> for CliError {
    fn from(e: DistillError) -> Self {
        match e {
            DistillError::SingularSpectrum { .. } => CliError::SingularSpectrum(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<ShapleyError> for CliError {
    fn from(e: ShapleyError) -> Self {
        match e {
            ShapleyError::TooManyPlayers { .. } => CliError::TooManyPlayers(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<IgError> for CliError {
    fn from(e: IgError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}
