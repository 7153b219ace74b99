use thiserror::Error;

use potlab_core::{DataError, PotError, SvmError};
use potlab_game::GameError;
use potlab_wild::WildError;

/// Exit codes: 0 success, 1 usage or config, 2 data or schema, 3 numerical.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SvmError> for CliError {
    fn from(e: SvmError) -> Self {
        match e {
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            SvmError::InvalidArgument(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<PotError> for CliError {
    fn from(e: PotError) -> Self {
        match e {
            PotError::Svm(s) => s.into(),
            PotError::Data(d) => d.into(),
            PotError::InvalidArgument(_) => CliError::Config(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::UnsupportedSpace(_) | GameError::InvalidArgument(_) | GameError::EnumerationLimit { .. } => {
                CliError::Config(e.to_string())
            }
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<WildError> for CliError {
    fn from(e: WildError) -> Self {
        match e {
            WildError::InvalidConfig(_) => CliError::Config(e.to_string()),
            WildError::Game(g) => g.into(),
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
