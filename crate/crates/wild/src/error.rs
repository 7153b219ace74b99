use potlab_game::GameError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WildError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

pub(crate) fn invalid(message: impl Into<String>) -> WildError {
    WildError::InvalidConfig(message.into())
}
