use thiserror::Error;

use crate::distribution::DistributionError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("agent {agent} cannot take action {action}")]
    InvalidAction { agent: usize, action: String },
    #[error("policy of agent {agent} is malformed: {source}")]
    MalformedPolicy { agent: usize, source: DistributionError },
    #[error("reaction policy is malformed: {0}")]
    MalformedReaction(DistributionError),
    #[error("transition model is malformed: {0}")]
    MalformedTransition(DistributionError),
    #[error("unknown agent {0}")]
    UnknownAgent(usize),
    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),
    #[error("exact enumeration exceeds {limit} leaf paths")]
    EnumerationLimit { limit: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("observations have zero posterior probability under every history")]
    InconsistentObservations,
}
