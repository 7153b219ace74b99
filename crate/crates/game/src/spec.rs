//! The assembled game: agents, turn order, policies, the system's reaction
//! policy, world dynamics, observations and benefit functions.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, DistributionError};
use crate::error::GameError;
use crate::history::StateHistory;
use crate::Scalar;

/// World state payload. Must be orderable for MAP tie-breaks and hashable for
/// enumeration.
pub trait WorldState: Clone + Eq + Hash + Ord + fmt::Debug + Send + Sync + 'static {}
impl<T> WorldState for T where T: Clone + Eq + Hash + Ord + fmt::Debug + Send + Sync + 'static {}

/// Agent action or system reaction payload.
pub trait Move: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {}
impl<T> Move for T where T: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}", self.0)
    }
}

/// Who a benefit function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Beneficiary {
    System,
    Agent(AgentId),
}

/// Which agent acts at each time step. Total on every `t >= 1`.
#[derive(Clone)]
pub struct TurnSchedule(Arc<dyn Fn(usize) -> AgentId + Send + Sync>);

impl TurnSchedule {
    pub fn new(f: impl Fn(usize) -> AgentId + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    /// The same agent at every step.
    pub fn constant(agent: AgentId) -> Self {
        Self::new(move |_| agent)
    }

    /// `order[t % order.len()]`.
    pub fn cyclic(order: Vec<AgentId>) -> Self {
        assert!(!order.is_empty(), "cyclic schedule needs at least one agent");
        Self::new(move |t| order[t % order.len()])
    }

    pub fn agent_at(&self, t: usize) -> AgentId {
        (self.0)(t)
    }
}

/// The admissible actions of an agent given the history.
pub struct ActionSpace<S, A>(Arc<dyn Fn(AgentId, &StateHistory<S>) -> Vec<A> + Send + Sync>);

impl<S, A> Clone for ActionSpace<S, A> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S, A> ActionSpace<S, A> {
    pub fn new(f: impl Fn(AgentId, &StateHistory<S>) -> Vec<A> + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn actions(&self, agent: AgentId, history: &StateHistory<S>) -> Vec<A> {
        (self.0)(agent, history)
    }
}

impl<S, A: Clone + Send + Sync + 'static> ActionSpace<S, A> {
    /// A fixed action set per agent, independent of the history.
    pub fn fixed(per_agent: Vec<Vec<A>>) -> Self {
        Self::new(move |agent, _| per_agent.get(agent.0).cloned().unwrap_or_default())
    }
}

type PolicyFn<S, A, F> =
    dyn Fn(&StateHistory<S>) -> Result<Distribution<A, F>, DistributionError> + Send + Sync;

/// An agent's probabilistic policy over its action set.
pub struct AgentPolicy<S, A, F>(Arc<PolicyFn<S, A, F>>);

impl<S, A, F> Clone for AgentPolicy<S, A, F> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S: 'static, A: Clone + 'static, F: Scalar> AgentPolicy<S, A, F> {
    pub fn new(
        f: impl Fn(&StateHistory<S>) -> Result<Distribution<A, F>, DistributionError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self(Arc::new(f))
    }

    pub fn deterministic(f: impl Fn(&StateHistory<S>) -> A + Send + Sync + 'static) -> Self {
        Self::new(move |h| Ok(Distribution::point(f(h))))
    }

    pub fn distribution(&self, history: &StateHistory<S>) -> Result<Distribution<A, F>, DistributionError> {
        (self.0)(history)
    }
}

type ReactionFn<S, A, R, F> =
    dyn Fn(&StateHistory<S>, &A) -> Result<Distribution<R, F>, DistributionError> + Send + Sync;

/// The optimization system's reaction policy, κ.
pub struct ReactionPolicy<S, A, R, F>(Arc<ReactionFn<S, A, R, F>>);

impl<S, A, R, F> Clone for ReactionPolicy<S, A, R, F> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S: 'static, A: 'static, R: Clone + 'static, F: Scalar> ReactionPolicy<S, A, R, F> {
    pub fn new(
        f: impl Fn(&StateHistory<S>, &A) -> Result<Distribution<R, F>, DistributionError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self(Arc::new(f))
    }

    pub fn deterministic(f: impl Fn(&StateHistory<S>, &A) -> R + Send + Sync + 'static) -> Self {
        Self::new(move |h, a| Ok(Distribution::point(f(h, a))))
    }

    pub fn distribution(&self, history: &StateHistory<S>, action: &A) -> Result<Distribution<R, F>, DistributionError> {
        (self.0)(history, action)
    }
}

type TransitionFn<S, A, R, F> =
    dyn Fn(&StateHistory<S>, &A, &R) -> Result<Distribution<S, F>, DistributionError> + Send + Sync;

/// World dynamics τ: the next-state distribution given history, action and reaction.
pub struct TransitionModel<S, A, R, F>(Arc<TransitionFn<S, A, R, F>>);

impl<S, A, R, F> Clone for TransitionModel<S, A, R, F> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S: Clone + 'static, A: 'static, R: 'static, F: Scalar> TransitionModel<S, A, R, F> {
    pub fn new(
        f: impl Fn(&StateHistory<S>, &A, &R) -> Result<Distribution<S, F>, DistributionError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self(Arc::new(f))
    }

    pub fn deterministic(f: impl Fn(&StateHistory<S>, &A, &R) -> S + Send + Sync + 'static) -> Self {
        Self::new(move |h, a, r| Ok(Distribution::point(f(h, a, r))))
    }

    pub fn distribution(
        &self,
        history: &StateHistory<S>,
        action: &A,
        reaction: &R,
    ) -> Result<Distribution<S, F>, DistributionError> {
        (self.0)(history, action, reaction)
    }
}

/// Each actor's deterministic view ω of the history.
pub struct ObservationFn<S, O>(Arc<dyn Fn(AgentId, &StateHistory<S>) -> O + Send + Sync>);

impl<S, O> Clone for ObservationFn<S, O> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S, O> ObservationFn<S, O> {
    pub fn new(f: impl Fn(AgentId, &StateHistory<S>) -> O + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn observe(&self, agent: AgentId, history: &StateHistory<S>) -> O {
        (self.0)(agent, history)
    }
}

impl<S: Clone + 'static> ObservationFn<S, S> {
    /// Full observability: every agent sees the current state.
    pub fn current_state() -> Self {
        Self::new(|_, h: &StateHistory<S>| h.current().clone())
    }
}

/// Probability that `agent` receives observation `O` when the world is in state `S`.
///
/// Only needed for MAP history estimation.
pub struct ObservationLikelihood<S, O, F>(Arc<dyn Fn(AgentId, &S, &O) -> F + Send + Sync>);

impl<S, O, F> Clone for ObservationLikelihood<S, O, F> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S, O, F: Scalar> ObservationLikelihood<S, O, F> {
    pub fn new(f: impl Fn(AgentId, &S, &O) -> F + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn likelihood(&self, agent: AgentId, state: &S, observation: &O) -> F {
        (self.0)(agent, state, observation)
    }
}

impl<S: PartialEq + 'static, F: Scalar> ObservationLikelihood<S, S, F> {
    /// Observation equals the state.
    pub fn noiseless() -> Self {
        Self::new(|_, s: &S, o: &S| if s == o { F::one() } else { F::zero() })
    }
}

/// Immediate benefit of a world state for one beneficiary.
pub struct BenefitFn<S, F> {
    owner: Beneficiary,
    value: Arc<dyn Fn(&S) -> F + Send + Sync>,
}

impl<S, F> Clone for BenefitFn<S, F> {
    fn clone(&self) -> Self {
        Self { owner: self.owner, value: Arc::clone(&self.value) }
    }
}

impl<S, F: Scalar> BenefitFn<S, F> {
    pub fn new(owner: Beneficiary, f: impl Fn(&S) -> F + Send + Sync + 'static) -> Self {
        Self { owner, value: Arc::new(f) }
    }

    pub fn owner(&self) -> Beneficiary {
        self.owner
    }

    pub fn value(&self, state: &S) -> F {
        (self.value)(state)
    }
}

/// σ combining the system benefit and the benefits of a target set of agents.
pub struct PopulationBenefit<F> {
    target: Vec<AgentId>,
    combiner: Arc<dyn Fn(F, &[F]) -> F + Send + Sync>,
}

impl<F> Clone for PopulationBenefit<F> {
    fn clone(&self) -> Self {
        Self { target: self.target.clone(), combiner: Arc::clone(&self.combiner) }
    }
}

impl<F: Scalar> PopulationBenefit<F> {
    /// `combiner(system_benefit, target_benefits)`; target benefits are passed
    /// in the order of `target`.
    pub fn new(target: Vec<AgentId>, combiner: impl Fn(F, &[F]) -> F + Send + Sync + 'static) -> Self {
        Self { target, combiner: Arc::new(combiner) }
    }

    /// Mean benefit of the target agents.
    pub fn mean(target: Vec<AgentId>) -> Self {
        Self::new(target, |_, b| {
            if b.is_empty() {
                F::zero()
            } else {
                b.iter().copied().sum::<F>() / F::from_count(b.len())
            }
        })
    }

    /// A single agent's own benefit.
    pub fn single(agent: AgentId) -> Self {
        Self::new(vec![agent], |_, b| b[0])
    }

    pub fn target(&self) -> &[AgentId] {
        &self.target
    }

    pub fn combine(&self, system: F, agents: &[F]) -> F {
        (self.combiner)(system, agents)
    }
}

/// Whether exact enumeration over the game's spaces is meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Finite,
    /// Distributions are still finite per call, but the reachable tree is not
    /// meant to be enumerated.
    Unbounded,
}

/// A complete stochastic game. Immutable once built; cloning is cheap because
/// every function component is reference counted.
pub struct GameSpec<S, A, R, O, F> {
    agent_count: usize,
    initial: S,
    schedule: TurnSchedule,
    actions: ActionSpace<S, A>,
    policies: Vec<AgentPolicy<S, A, F>>,
    reaction: ReactionPolicy<S, A, R, F>,
    transition: TransitionModel<S, A, R, F>,
    observation: ObservationFn<S, O>,
    likelihood: Option<ObservationLikelihood<S, O, F>>,
    benefits: Vec<BenefitFn<S, F>>,
    population: PopulationBenefit<F>,
    state_space: Option<Vec<S>>,
    space: SpaceKind,
}

impl<S: Clone, A, R, O, F> Clone for GameSpec<S, A, R, O, F> {
    fn clone(&self) -> Self {
        Self {
            agent_count: self.agent_count,
            initial: self.initial.clone(),
            schedule: self.schedule.clone(),
            actions: self.actions.clone(),
            policies: self.policies.clone(),
            reaction: self.reaction.clone(),
            transition: self.transition.clone(),
            observation: self.observation.clone(),
            likelihood: self.likelihood.clone(),
            benefits: self.benefits.clone(),
            population: self.population.clone(),
            state_space: self.state_space.clone(),
            space: self.space,
        }
    }
}

impl<S, A, R, O, F> fmt::Debug for GameSpec<S, A, R, O, F>
where
    S: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("agent_count", &self.agent_count)
            .field("initial", &self.initial)
            .field("benefits", &self.benefits.len())
            .field("space", &self.space)
            .finish_non_exhaustive()
    }
}

impl<S, A, R, O, F> GameSpec<S, A, R, O, F>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    pub fn builder(initial: S) -> GameBuilder<S, A, R, O, F> {
        GameBuilder {
            initial,
            schedule: None,
            actions: None,
            policies: Vec::new(),
            reaction: None,
            transition: None,
            observation: None,
            likelihood: None,
            benefits: Vec::new(),
            population: None,
            state_space: None,
            space: SpaceKind::Finite,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agent_count).map(AgentId)
    }

    pub fn initial_state(&self) -> &S {
        &self.initial
    }

    pub fn initial_history(&self) -> StateHistory<S> {
        StateHistory::new(self.initial.clone())
    }

    pub fn schedule(&self) -> &TurnSchedule {
        &self.schedule
    }

    /// θ(t), checked against the agent count.
    pub fn acting_agent(&self, t: usize) -> Result<AgentId, GameError> {
        let agent = self.schedule.agent_at(t);
        self.check_agent(agent)?;
        Ok(agent)
    }

    pub fn actions(&self, agent: AgentId, history: &StateHistory<S>) -> Vec<A> {
        self.actions.actions(agent, history)
    }

    pub fn policy(&self, agent: AgentId) -> Result<&AgentPolicy<S, A, F>, GameError> {
        self.policies.get(agent.0).ok_or(GameError::UnknownAgent(agent.0))
    }

    pub fn reaction_policy(&self) -> &ReactionPolicy<S, A, R, F> {
        &self.reaction
    }

    pub fn transition_model(&self) -> &TransitionModel<S, A, R, F> {
        &self.transition
    }

    pub fn observe(&self, agent: AgentId, history: &StateHistory<S>) -> O {
        self.observation.observe(agent, history)
    }

    pub fn observation_likelihood(&self) -> Option<&ObservationLikelihood<S, O, F>> {
        self.likelihood.as_ref()
    }

    pub fn benefits(&self) -> &[BenefitFn<S, F>] {
        &self.benefits
    }

    pub fn benefit_of(&self, owner: Beneficiary) -> Option<&BenefitFn<S, F>> {
        self.benefits.iter().find(|b| b.owner() == owner)
    }

    pub fn population(&self) -> &PopulationBenefit<F> {
        &self.population
    }

    /// B_pop(s) = σ(B_o(s), {B_i(s)}_{i ∈ X}). Missing benefit functions count as zero.
    pub fn population_value(&self, state: &S) -> F {
        let system = self.benefit_of(Beneficiary::System).map_or(F::zero(), |b| b.value(state));
        let agents: Vec<F> = self
            .population
            .target()
            .iter()
            .map(|&a| self.benefit_of(Beneficiary::Agent(a)).map_or(F::zero(), |b| b.value(state)))
            .collect();
        self.population.combine(system, &agents)
    }

    pub fn state_space(&self) -> Option<&[S]> {
        self.state_space.as_deref()
    }

    pub fn space_kind(&self) -> SpaceKind {
        self.space
    }

    /// Replaces the system's reaction policy.
    pub fn with_reaction(&self, reaction: ReactionPolicy<S, A, R, F>) -> Self {
        let mut game = self.clone();
        game.reaction = reaction;
        game
    }

    /// Replaces one agent's policy.
    pub fn with_policy(&self, agent: AgentId, policy: AgentPolicy<S, A, F>) -> Result<Self, GameError> {
        self.check_agent(agent)?;
        let mut game = self.clone();
        game.policies[agent.0] = policy;
        Ok(game)
    }

    pub fn with_population(&self, population: PopulationBenefit<F>) -> Result<Self, GameError> {
        for &a in population.target() {
            self.check_agent(a)?;
        }
        let mut game = self.clone();
        game.population = population;
        Ok(game)
    }

    pub fn with_initial_state(&self, initial: S) -> Self {
        let mut game = self.clone();
        game.initial = initial;
        game
    }

    pub(crate) fn check_agent(&self, agent: AgentId) -> Result<(), GameError> {
        if agent.0 < self.agent_count {
            Ok(())
        } else {
            Err(GameError::UnknownAgent(agent.0))
        }
    }

    pub(crate) fn require_finite(&self, what: &str) -> Result<(), GameError> {
        match self.space {
            SpaceKind::Finite => Ok(()),
            SpaceKind::Unbounded => Err(GameError::UnsupportedSpace(format!(
                "{what} requires a finite, enumerable game"
            ))),
        }
    }
}

/// Assembles a [`GameSpec`]; every component except observations and the
/// state enumeration is required.
pub struct GameBuilder<S, A, R, O, F> {
    initial: S,
    schedule: Option<TurnSchedule>,
    actions: Option<ActionSpace<S, A>>,
    policies: Vec<AgentPolicy<S, A, F>>,
    reaction: Option<ReactionPolicy<S, A, R, F>>,
    transition: Option<TransitionModel<S, A, R, F>>,
    observation: Option<ObservationFn<S, O>>,
    likelihood: Option<ObservationLikelihood<S, O, F>>,
    benefits: Vec<BenefitFn<S, F>>,
    population: Option<PopulationBenefit<F>>,
    state_space: Option<Vec<S>>,
    space: SpaceKind,
}

impl<S, A, R, O, F> GameBuilder<S, A, R, O, F>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    pub fn schedule(mut self, schedule: TurnSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn actions(mut self, actions: ActionSpace<S, A>) -> Self {
        self.actions = Some(actions);
        self
    }

    /// Adds the next agent; agent ids are assigned in call order.
    pub fn agent(mut self, policy: AgentPolicy<S, A, F>) -> Self {
        self.policies.push(policy);
        self
    }

    pub fn reaction(mut self, reaction: ReactionPolicy<S, A, R, F>) -> Self {
        self.reaction = Some(reaction);
        self
    }

    pub fn transition(mut self, transition: TransitionModel<S, A, R, F>) -> Self {
        self.transition = Some(transition);
        self
    }

    pub fn observation(mut self, observation: ObservationFn<S, O>) -> Self {
        self.observation = Some(observation);
        self
    }

    pub fn likelihood(mut self, likelihood: ObservationLikelihood<S, O, F>) -> Self {
        self.likelihood = Some(likelihood);
        self
    }

    pub fn benefit(mut self, benefit: BenefitFn<S, F>) -> Self {
        self.benefits.push(benefit);
        self
    }

    pub fn population(mut self, population: PopulationBenefit<F>) -> Self {
        self.population = Some(population);
        self
    }

    pub fn state_space(mut self, states: Vec<S>) -> Self {
        self.state_space = Some(states);
        self
    }

    pub fn space(mut self, space: SpaceKind) -> Self {
        self.space = space;
        self
    }

    pub fn build(self) -> Result<GameSpec<S, A, R, O, F>, GameError> {
        let missing = |what: &str| GameError::InvalidArgument(format!("game is missing its {what}"));
        let agent_count = self.policies.len();
        if agent_count == 0 {
            return Err(GameError::InvalidArgument("game needs at least one agent".into()));
        }
        let observation = match self.observation {
            Some(o) => o,
            None => return Err(missing("observation function")),
        };
        let population = self.population.unwrap_or_else(|| PopulationBenefit::new(Vec::new(), |s, _| s));
        let check = |a: AgentId| {
            if a.0 < agent_count {
                Ok(())
            } else {
                Err(GameError::UnknownAgent(a.0))
            }
        };
        for b in &self.benefits {
            if let Beneficiary::Agent(a) = b.owner() {
                check(a)?;
            }
        }
        for &a in population.target() {
            check(a)?;
        }
        Ok(GameSpec {
            agent_count,
            initial: self.initial,
            schedule: self.schedule.ok_or_else(|| missing("turn schedule"))?,
            actions: self.actions.ok_or_else(|| missing("action space"))?,
            policies: self.policies,
            reaction: self.reaction.ok_or_else(|| missing("reaction policy"))?,
            transition: self.transition.ok_or_else(|| missing("transition model"))?,
            observation,
            likelihood: self.likelihood,
            benefits: self.benefits,
            population,
            state_space: self.state_space,
            space: self.space,
        })
    }
}
