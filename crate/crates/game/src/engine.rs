//! Sampling a single interaction and whole trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::history::StateHistory;
use crate::spec::{AgentId, GameSpec, Move, WorldState};
use crate::Scalar;

/// The generator used for every seeded run.
pub type GameRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> GameRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep<S, A, R, F> {
    /// 1-based time of the action.
    pub time: usize,
    /// World state after the transition.
    pub state: S,
    pub agent: AgentId,
    pub action: A,
    pub reaction: R,
    /// Immediate benefit of `state` for each of the game's benefit functions, in declaration order.
    pub benefits: Vec<F>,
    /// B_pop of `state`.
    pub population: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S, A, R, F> {
    pub steps: Vec<TrajectoryStep<S, A, R, F>>,
    pub seed: u64,
}

impl<S, A, R, F: Scalar> Trajectory<S, A, R, F> {
    /// Σ γ^t B_pop(s_t) over the recorded steps.
    pub fn discounted_population(&self, gamma: F) -> F {
        self.steps
            .iter()
            .map(|s| gamma.powi(s.time as i32) * s.population)
            .fold(F::zero(), |a, b| a + b)
    }

    /// Σ_t of the `index`-th benefit function.
    pub fn total_benefit(&self, index: usize) -> F {
        self.steps.iter().map(|s| s.benefits[index]).fold(F::zero(), |a, b| a + b)
    }
}

/// One interaction: samples the reaction from κ, then the next state from τ,
/// and appends that state to `history`.
pub fn step<S, A, R, O, F, G>(
    game: &GameSpec<S, A, R, O, F>,
    history: &mut StateHistory<S>,
    agent: AgentId,
    action: &A,
    rng: &mut G,
) -> Result<(R, S), GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
    G: Rng + ?Sized,
{
    game.check_agent(agent)?;
    if !game.actions(agent, history).contains(action) {
        return Err(GameError::InvalidAction { agent: agent.0, action: format!("{action:?}") });
    }
    let reactions = game
        .reaction_policy()
        .distribution(history, action)
        .map_err(GameError::MalformedReaction)?;
    let reaction = reactions.sample(rng).clone();
    let next = game
        .transition_model()
        .distribution(history, action, &reaction)
        .map_err(GameError::MalformedTransition)?;
    let state = next.sample(rng).clone();
    history.push(state.clone());
    Ok((reaction, state))
}

/// Runs `horizon` steps from the game's initial state. The acting agent at
/// time `t` is θ(t) and its action is sampled from its policy.
pub fn simulate<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory<S, A, R, F>, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    if horizon == 0 {
        return Err(GameError::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut history = game.initial_history();
    let mut steps = Vec::with_capacity(horizon);
    for time in 1..=horizon {
        let agent = game.acting_agent(time)?;
        let policy = game
            .policy(agent)?
            .distribution(&history)
            .map_err(|source| GameError::MalformedPolicy { agent: agent.0, source })?;
        let action = policy.sample(&mut rng).clone();
        let (reaction, state) = step(game, &mut history, agent, &action, &mut rng)?;
        let benefits = game.benefits().iter().map(|b| b.value(&state)).collect();
        let population = game.population_value(&state);
        steps.push(TrajectoryStep { time, state, agent, action, reaction, benefits, population });
    }
    Ok(Trajectory { steps, seed })
}
