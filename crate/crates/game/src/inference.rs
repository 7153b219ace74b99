//! Maximum a posteriori estimation of the hidden state history.

use crate::distribution::Distribution;
use crate::error::GameError;
use crate::history::StateHistory;
use crate::spec::{AgentId, GameSpec, Move, WorldState};
use crate::Scalar;

/// Prior over state histories.
pub enum HistoryPrior<S, F> {
    /// Every enumerated history equally likely.
    Uniform,
    /// An explicit distribution; histories outside its support get zero mass.
    Explicit(Distribution<StateHistory<S>, F>),
    /// Histories generated by the game's own dynamics from an initial-state
    /// distribution, driven by the observer's actions: transition `j` uses
    /// `actions[j]` and marginalizes the system's reaction.
    Dynamics { initial: Distribution<S, F> },
}

/// The posterior winner and its unnormalized and normalized mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEstimate<S, F> {
    pub history: StateHistory<S>,
    pub posterior: F,
    pub evidence: F,
}

/// argmax over histories `h` of length `observations.len()` of
/// `prior(h) · Π_j Pr[observations[j] | h_j]`.
///
/// Histories are enumerated in lexicographic order over the game's declared
/// state space and only a strictly larger posterior replaces the incumbent,
/// so ties resolve to the lexicographically smallest history.
pub fn map_state_history<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    agent: AgentId,
    observations: &[O],
    actions: &[A],
    prior: &HistoryPrior<S, F>,
) -> Result<MapEstimate<S, F>, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    game.require_finite("map_state_history")?;
    game.check_agent(agent)?;
    let likelihood = game.observation_likelihood().ok_or_else(|| {
        GameError::UnsupportedSpace("game has no observation likelihood model".into())
    })?;
    let mut space: Vec<S> = game
        .state_space()
        .ok_or_else(|| GameError::UnsupportedSpace("game does not enumerate its state space".into()))?
        .to_vec();
    space.sort();
    space.dedup();
    let len = observations.len();
    if len == 0 {
        return Err(GameError::InvalidArgument("at least one observation is required".into()));
    }
    if space.is_empty() {
        return Err(GameError::UnsupportedSpace("empty state space".into()));
    }
    if matches!(prior, HistoryPrior::Dynamics { .. }) && actions.len() + 1 < len {
        return Err(GameError::InvalidArgument(format!(
            "{} observations need at least {} actions",
            len,
            len - 1
        )));
    }
    let total = (space.len() as f64).powi(len as i32);
    if total > crate::value::DEFAULT_ENUMERATION_LIMIT as f64 {
        return Err(GameError::EnumerationLimit { limit: crate::value::DEFAULT_ENUMERATION_LIMIT });
    }

    let mut best: Option<(StateHistory<S>, F)> = None;
    let mut evidence = F::zero();
    let mut digits = vec![0usize; len];
    loop {
        let states: Vec<S> = digits.iter().map(|&d| space[d].clone()).collect();
        let history = StateHistory::from_states(states).expect("len >= 1");
        let mut mass = prior_mass(game, prior, &history, actions)?;
        if mass > F::zero() {
            for (state, obs) in history.states().iter().zip(observations) {
                mass = mass * likelihood.likelihood(agent, state, obs);
            }
        }
        evidence = evidence + mass;
        if mass > F::zero() && best.as_ref().is_none_or(|(_, m)| mass > *m) {
            best = Some((history, mass));
        }
        // odometer increment, last position fastest => lexicographic order
        let mut pos = len;
        loop {
            if pos == 0 {
                let (history, mass) = best.ok_or(GameError::InconsistentObservations)?;
                return Ok(MapEstimate { history, posterior: mass / evidence, evidence });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < space.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn prior_mass<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    prior: &HistoryPrior<S, F>,
    history: &StateHistory<S>,
    actions: &[A],
) -> Result<F, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    match prior {
        HistoryPrior::Uniform => Ok(F::one()),
        HistoryPrior::Explicit(d) => Ok(d.probability_of(history)),
        HistoryPrior::Dynamics { initial } => {
            let states = history.states();
            let mut mass = initial.probability_of(&states[0]);
            let mut prefix = StateHistory::new(states[0].clone());
            for (j, next) in states.iter().enumerate().skip(1) {
                if mass <= F::zero() {
                    break;
                }
                let action = &actions[j - 1];
                let reactions = game
                    .reaction_policy()
                    .distribution(&prefix, action)
                    .map_err(GameError::MalformedReaction)?;
                let mut step = F::zero();
                for (reaction, pr) in reactions.iter() {
                    let tau = game
                        .transition_model()
                        .distribution(&prefix, action, reaction)
                        .map_err(GameError::MalformedTransition)?;
                    step = step + pr * tau.probability_of(next);
                }
                mass = mass * step;
                prefix.push(next.clone());
            }
            Ok(mass)
        }
    }
}
