//! Stochastic-game model of an optimization system interacting with a
//! population of agents, some of whom may deploy protective strategies.
//!
//! One agent acts per time step according to the turn schedule. The system
//! answers each action with a reaction sampled from its reaction policy, and
//! the world moves to a state sampled from the transition model. Agents and
//! the system score world states with immediate benefit functions; a
//! population benefit combines them.
//!
//! The engine is generic over the scalar type (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`.

#![allow(clippy::type_complexity)]

pub mod distribution;
pub mod engine;
mod error;
pub mod history;
pub mod inference;
pub mod scalar;
pub mod search;
pub mod spec;
pub mod tabular;
pub mod value;

pub use distribution::{Distribution, DistributionError, PROBABILITY_TOLERANCE};
pub use engine::{seeded_rng, simulate, step, GameRng, Trajectory, TrajectoryStep};
pub use error::GameError;
pub use history::StateHistory;
pub use inference::{map_state_history, HistoryPrior, MapEstimate};
pub use scalar::Scalar;
pub use search::{best_protector_policy, best_reaction_policy, PolicyChoice};
pub use spec::{
    ActionSpace, AgentId, AgentPolicy, Beneficiary, BenefitFn, GameBuilder, GameSpec, Move, ObservationFn,
    ObservationLikelihood, PopulationBenefit, ReactionPolicy, SpaceKind, TransitionModel, TurnSchedule, WorldState,
};
pub use tabular::{Combiner, PopulationTable, TabularGame, TabularSpec};
pub use value::{
    discounted_value, discounted_value_with_limit, expected_immediate_benefit, EvalMode, Objective, ValueEstimate,
    ValueParams, DEFAULT_ENUMERATION_LIMIT,
};

pub type Game64<S, A, R, O> = GameSpec<S, A, R, O, f64>;
pub type Game32<S, A, R, O> = GameSpec<S, A, R, O, f32>;
pub type Distribution64<T> = Distribution<T, f64>;
pub type ValueParams64 = ValueParams<f64>;
pub type Trajectory64<S, A, R> = Trajectory<S, A, R, f64>;
