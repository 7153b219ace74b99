//! Expected immediate benefit and expected discounted total benefit.
//!
//! Discounting uses the absolute time index: the term for the action taken
//! at time `t` is weighted by `γ^t`, not `γ^(t-k)`. With a start time of
//! `k`, the summed steps are `t = k+1 ..= k+n`. This differs from the usual
//! reinforcement-learning convention, where the first term is undiscounted.
//!
//! Time convention: the action at time `t` is taken by θ(t) on the history
//! the caller passes in (for a fresh game, the history holding only the
//! initial state), and its benefit is measured on the state it leads to.

use serde::{Deserialize, Serialize};

use crate::engine::{seeded_rng, step};
use crate::error::GameError;
use crate::history::StateHistory;
use crate::spec::{Beneficiary, BenefitFn, GameSpec, Move, WorldState};
use crate::Scalar;

/// Upper bound on the number of leaf paths visited by exact enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueParams<F> {
    gamma: F,
    horizon: usize,
    start: usize,
}

impl<F: Scalar> ValueParams<F> {
    pub fn new(gamma: F, horizon: usize, start: usize) -> Result<Self, GameError> {
        if !(gamma >= F::zero() && gamma <= F::one()) {
            return Err(GameError::InvalidArgument(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        if horizon == 0 {
            return Err(GameError::InvalidArgument("horizon must be at least 1".into()));
        }
        Ok(Self { gamma, horizon, start })
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// The summed time steps, `k+1 ..= k+n`.
    pub fn times(&self) -> std::ops::RangeInclusive<usize> {
        self.start + 1..=self.start + self.horizon
    }

    pub fn discount(&self, t: usize) -> F {
        self.gamma.powi(t as i32)
    }
}

/// Which benefit a value is computed for.
pub enum Objective<'a, S, F> {
    /// The benefit function the game declares for this owner.
    Of(Beneficiary),
    /// An arbitrary benefit function.
    Benefit(&'a BenefitFn<S, F>),
    /// The game's population benefit σ(B_o, {B_i}).
    Population,
}

impl<S, F> Clone for Objective<'_, S, F> {
    fn clone(&self) -> Self {
        match self {
            Objective::Of(b) => Objective::Of(*b),
            Objective::Benefit(b) => Objective::Benefit(b),
            Objective::Population => Objective::Population,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// A value with its Monte Carlo standard error (zero for exact evaluation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate<F> {
    pub value: F,
    pub std_error: F,
    pub samples: usize,
}

struct Evaluator<'g, S, A, R, O, F> {
    game: &'g GameSpec<S, A, R, O, F>,
    benefit: Box<dyn Fn(&S) -> F + 'g>,
}

impl<'g, S, A, R, O, F> Evaluator<'g, S, A, R, O, F>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    fn new(game: &'g GameSpec<S, A, R, O, F>, objective: Objective<'g, S, F>) -> Result<Self, GameError> {
        let benefit: Box<dyn Fn(&S) -> F + 'g> = match objective {
            Objective::Of(owner) => {
                let b = game.benefit_of(owner).ok_or_else(|| {
                    GameError::InvalidArgument(format!("game declares no benefit for {owner:?}"))
                })?;
                Box::new(move |s| b.value(s))
            }
            Objective::Benefit(b) => Box::new(move |s| b.value(s)),
            Objective::Population => Box::new(move |s| game.population_value(s)),
        };
        Ok(Self { game, benefit })
    }

    /// Σ_{r'} Σ_{s'} B(s') Pr[τ = s'] Pr[κ = r'].
    fn immediate(&self, history: &StateHistory<S>, action: &A) -> Result<F, GameError> {
        let reactions = self
            .game
            .reaction_policy()
            .distribution(history, action)
            .map_err(GameError::MalformedReaction)?;
        let mut total = F::zero();
        for (reaction, pr) in reactions.iter() {
            if pr <= F::zero() {
                continue;
            }
            let next = self
                .game
                .transition_model()
                .distribution(history, action, reaction)
                .map_err(GameError::MalformedTransition)?;
            total = total + pr * next.expect(|s| (self.benefit)(s));
        }
        Ok(total)
    }

    /// Expected Σ_{u=t}^{last} γ^u B(s_{u+1}) given `history` at time `t`.
    fn exact(
        &self,
        history: &mut StateHistory<S>,
        t: usize,
        params: &ValueParams<F>,
        leaves: &mut u64,
        limit: u64,
    ) -> Result<F, GameError> {
        let last = params.start() + params.horizon();
        let agent = self.game.acting_agent(t)?;
        let policy = self
            .game
            .policy(agent)?
            .distribution(history)
            .map_err(|source| GameError::MalformedPolicy { agent: agent.0, source })?;
        let discount = params.discount(t);
        let depth = history.len();
        let mut total = F::zero();
        for (action, pa) in policy.iter() {
            if pa <= F::zero() {
                continue;
            }
            if !self.game.actions(agent, history).contains(action) {
                return Err(GameError::InvalidAction { agent: agent.0, action: format!("{action:?}") });
            }
            let reactions = self
                .game
                .reaction_policy()
                .distribution(history, action)
                .map_err(GameError::MalformedReaction)?;
            for (reaction, pr) in reactions.iter() {
                if pr <= F::zero() {
                    continue;
                }
                let next = self
                    .game
                    .transition_model()
                    .distribution(history, action, reaction)
                    .map_err(GameError::MalformedTransition)?;
                for (state, ps) in next.iter() {
                    if ps <= F::zero() {
                        continue;
                    }
                    let weight = pa * pr * ps;
                    let mut term = discount * (self.benefit)(state);
                    if t < last {
                        history.push(state.clone());
                        let future = self.exact(history, t + 1, params, leaves, limit);
                        history.truncate(depth);
                        term = term + future?;
                    } else {
                        *leaves += 1;
                        if *leaves > limit {
                            return Err(GameError::EnumerationLimit { limit });
                        }
                    }
                    total = total + weight * term;
                }
            }
        }
        Ok(total)
    }

    fn monte_carlo(
        &self,
        history: &StateHistory<S>,
        params: &ValueParams<F>,
        samples: usize,
        seed: u64,
    ) -> Result<ValueEstimate<F>, GameError> {
        if samples < 2 {
            return Err(GameError::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
        }
        let mut rng = seeded_rng(seed);
        // Welford accumulation in f64 keeps f32 games numerically sane.
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for i in 0..samples {
            let mut h = history.clone();
            let mut sum = F::zero();
            for t in params.times() {
                let agent = self.game.acting_agent(t)?;
                let policy = self
                    .game
                    .policy(agent)?
                    .distribution(&h)
                    .map_err(|source| GameError::MalformedPolicy { agent: agent.0, source })?;
                let action = policy.sample(&mut rng).clone();
                let (_, state) = step(self.game, &mut h, agent, &action, &mut rng)?;
                sum = sum + params.discount(t) * (self.benefit)(&state);
            }
            let x = sum.as_f64();
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let variance = m2 / (samples - 1) as f64;
        Ok(ValueEstimate {
            value: F::lit(mean),
            std_error: F::lit((variance / samples as f64).sqrt()),
            samples,
        })
    }
}

/// B^κ(history, action): the expected benefit of the state reached by taking
/// `action` at `history`, over the reaction and the transition.
pub fn expected_immediate_benefit<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    objective: Objective<'_, S, F>,
    history: &StateHistory<S>,
    action: &A,
) -> Result<F, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    game.require_finite("expected_immediate_benefit")?;
    let evaluator = Evaluator::new(game, objective)?;
    evaluator.immediate(history, action)
}

/// V(history) = E[Σ_{t=k+1}^{k+n} γ^t B^κ(s_t, a_{θ(t),t})].
///
/// Exact mode walks the full tree of (action, reaction, next state) choices
/// weighted by π, κ and τ, and fails with [`GameError::EnumerationLimit`]
/// beyond [`DEFAULT_ENUMERATION_LIMIT`] leaf paths.
pub fn discounted_value<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    objective: Objective<'_, S, F>,
    history: &StateHistory<S>,
    params: &ValueParams<F>,
    mode: EvalMode,
) -> Result<ValueEstimate<F>, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    discounted_value_with_limit(game, objective, history, params, mode, DEFAULT_ENUMERATION_LIMIT)
}

pub fn discounted_value_with_limit<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    objective: Objective<'_, S, F>,
    history: &StateHistory<S>,
    params: &ValueParams<F>,
    mode: EvalMode,
    limit: u64,
) -> Result<ValueEstimate<F>, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    let evaluator = Evaluator::new(game, objective)?;
    match mode {
        EvalMode::Exact => {
            game.require_finite("exact discounted_value")?;
            let mut h = history.clone();
            let mut leaves = 0u64;
            let value = evaluator.exact(&mut h, params.start() + 1, params, &mut leaves, limit)?;
            Ok(ValueEstimate { value, std_error: F::zero(), samples: 0 })
        }
        EvalMode::MonteCarlo { samples, seed } => evaluator.monte_carlo(history, params, samples, seed),
    }
}
