//! Finite Markov games described by probability tables.
//!
//! States, actions, reactions and observations are plain indices. Every agent
//! shares the action set `0..actions`. Policies, κ and τ depend on the current
//! state only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, DistributionError};
use crate::engine::seeded_rng;
use crate::error::GameError;
use crate::history::StateHistory;
use crate::spec::{
    ActionSpace, AgentId, AgentPolicy, Beneficiary, BenefitFn, GameSpec, ObservationFn, ObservationLikelihood,
    PopulationBenefit, ReactionPolicy, TransitionModel, TurnSchedule,
};
use crate::Scalar;

pub type TabularSpec<F> = GameSpec<usize, usize, usize, usize, F>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// Mean of the target agents' benefits.
    Mean,
    /// Sum of the target agents' benefits.
    Sum,
    /// The system's benefit alone.
    System,
    /// Smallest target-agent benefit.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTable {
    pub target: Vec<usize>,
    pub combiner: Combiner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularGame {
    pub states: usize,
    pub initial_state: usize,
    /// θ(t) = schedule[t % schedule.len()].
    pub schedule: Vec<usize>,
    pub actions: usize,
    pub reactions: usize,
    /// `[agent][state][action]`
    pub policies: Vec<Vec<Vec<f64>>>,
    /// `[state][action][reaction]`
    pub reaction_probs: Vec<Vec<Vec<f64>>>,
    /// `[state][action][reaction][next_state]`
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[state]`
    pub system_benefit: Vec<f64>,
    /// `[agent][state]`
    pub agent_benefits: Vec<Vec<f64>>,
    pub population: PopulationTable,
    /// Optional `[state][observation]` likelihood table; observations default to the state itself.
    #[serde(default)]
    pub observation: Option<Vec<Vec<f64>>>,
    /// Deterministic κ candidates, `[candidate][state][action] -> reaction`.
    #[serde(default)]
    pub reaction_candidates: Vec<Vec<Vec<usize>>>,
    #[serde(default)]
    pub protector: Option<usize>,
    /// Deterministic protector policies, `[candidate][state] -> action`.
    #[serde(default)]
    pub protector_candidates: Vec<Vec<usize>>,
}

fn table_err(msg: String) -> GameError {
    GameError::InvalidArgument(msg)
}

fn check_dist(row: &[f64], len: usize, what: &str) -> Result<(), GameError> {
    if row.len() != len {
        return Err(table_err(format!("{what}: expected {len} entries, got {}", row.len())));
    }
    Distribution::new(row.iter().map(|p| ((), *p)).collect())
        .map(|_| ())
        .map_err(|e| table_err(format!("{what}: {e}")))
}

fn dist_of<F: Scalar>(row: &[f64]) -> Result<Distribution<usize, F>, DistributionError> {
    Distribution::new(row.iter().enumerate().map(|(i, p)| (i, F::lit(*p))).collect())
}

impl TabularGame {
    pub fn agent_count(&self) -> usize {
        self.policies.len()
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let (ns, na, nr, ng) = (self.states, self.actions, self.reactions, self.agent_count());
        if ns == 0 || na == 0 || nr == 0 || ng == 0 {
            return Err(table_err("states, actions, reactions and agents must all be positive".into()));
        }
        if self.initial_state >= ns {
            return Err(table_err(format!("initial_state {} out of range", self.initial_state)));
        }
        if self.schedule.is_empty() || self.schedule.iter().any(|&a| a >= ng) {
            return Err(table_err("schedule must be non-empty and name existing agents".into()));
        }
        for (g, per_state) in self.policies.iter().enumerate() {
            if per_state.len() != ns {
                return Err(table_err(format!("policy of agent {g} needs {ns} rows")));
            }
            for (s, row) in per_state.iter().enumerate() {
                check_dist(row, na, &format!("policies[{g}][{s}]"))?;
            }
        }
        if self.reaction_probs.len() != ns || self.transitions.len() != ns {
            return Err(table_err(format!("reaction and transition tables need {ns} rows")));
        }
        for s in 0..ns {
            if self.reaction_probs[s].len() != na || self.transitions[s].len() != na {
                return Err(table_err(format!("state {s}: tables need {na} action rows")));
            }
            for a in 0..na {
                check_dist(&self.reaction_probs[s][a], nr, &format!("reaction_probs[{s}][{a}]"))?;
                if self.transitions[s][a].len() != nr {
                    return Err(table_err(format!("transitions[{s}][{a}] needs {nr} reaction rows")));
                }
                for r in 0..nr {
                    check_dist(&self.transitions[s][a][r], ns, &format!("transitions[{s}][{a}][{r}]"))?;
                }
            }
        }
        if self.system_benefit.len() != ns {
            return Err(table_err(format!("system_benefit needs {ns} entries")));
        }
        if self.agent_benefits.len() != ng || self.agent_benefits.iter().any(|b| b.len() != ns) {
            return Err(table_err(format!("agent_benefits needs {ng} rows of {ns} entries")));
        }
        if self.population.target.iter().any(|&a| a >= ng) {
            return Err(table_err("population target names an unknown agent".into()));
        }
        if let Some(obs) = &self.observation {
            if obs.len() != ns {
                return Err(table_err(format!("observation table needs {ns} rows")));
            }
            let width = obs[0].len();
            for (s, row) in obs.iter().enumerate() {
                check_dist(row, width, &format!("observation[{s}]"))?;
            }
        }
        for (c, cand) in self.reaction_candidates.iter().enumerate() {
            if cand.len() != ns || cand.iter().any(|row| row.len() != na || row.iter().any(|&r| r >= nr)) {
                return Err(table_err(format!("reaction candidate {c} must map every (state, action) to a reaction")));
            }
        }
        if let Some(p) = self.protector {
            if p >= ng {
                return Err(table_err(format!("protector {p} is not an agent")));
            }
        }
        for (c, cand) in self.protector_candidates.iter().enumerate() {
            if cand.len() != ns || cand.iter().any(|&a| a >= na) {
                return Err(table_err(format!("protector candidate {c} must map every state to an action")));
            }
        }
        Ok(())
    }

    pub fn build<F: Scalar>(&self) -> Result<TabularSpec<F>, GameError> {
        self.validate()?;
        let schedule = self.schedule.iter().map(|&a| AgentId(a)).collect();
        let mut builder = GameSpec::builder(self.initial_state)
            .schedule(TurnSchedule::cyclic(schedule))
            .actions(ActionSpace::fixed(vec![(0..self.actions).collect(); self.agent_count()]))
            .reaction(self.reaction_from_probs())
            .transition({
                let table = self.transitions.clone();
                TransitionModel::new(move |h: &StateHistory<usize>, a: &usize, r: &usize| {
                    dist_of(&table[*h.current()][*a][*r])
                })
            })
            .observation(ObservationFn::new(|_, h: &StateHistory<usize>| *h.current()))
            .state_space((0..self.states).collect());
        for per_state in &self.policies {
            let table = per_state.clone();
            builder = builder.agent(AgentPolicy::new(move |h: &StateHistory<usize>| dist_of(&table[*h.current()])));
        }
        let system = self.system_benefit.clone();
        builder = builder.benefit(BenefitFn::new(Beneficiary::System, move |s: &usize| F::lit(system[*s])));
        for (g, values) in self.agent_benefits.iter().enumerate() {
            let values = values.clone();
            builder = builder.benefit(BenefitFn::new(Beneficiary::Agent(AgentId(g)), move |s: &usize| {
                F::lit(values[*s])
            }));
        }
        let target = self.population.target.iter().map(|&a| AgentId(a)).collect();
        let population = match self.population.combiner {
            Combiner::Mean => PopulationBenefit::mean(target),
            Combiner::Sum => PopulationBenefit::new(target, |_, b: &[F]| b.iter().copied().sum()),
            Combiner::System => PopulationBenefit::new(target, |s, _| s),
            Combiner::Min => PopulationBenefit::new(target, |_, b: &[F]| {
                b.iter().copied().fold(F::infinity(), F::min)
            }),
        };
        builder = builder.population(population);
        builder = match &self.observation {
            Some(table) => {
                let table = table.clone();
                builder.likelihood(ObservationLikelihood::new(move |_, s: &usize, o: &usize| {
                    F::lit(table[*s].get(*o).copied().unwrap_or(0.0))
                }))
            }
            None => builder.likelihood(ObservationLikelihood::noiseless()),
        };
        builder.build()
    }

    fn reaction_from_probs<F: Scalar>(&self) -> ReactionPolicy<usize, usize, usize, F> {
        let table = self.reaction_probs.clone();
        ReactionPolicy::new(move |h: &StateHistory<usize>, a: &usize| dist_of(&table[*h.current()][*a]))
    }

    pub fn reaction_candidate<F: Scalar>(&self, index: usize) -> Option<ReactionPolicy<usize, usize, usize, F>> {
        let table = self.reaction_candidates.get(index)?.clone();
        Some(ReactionPolicy::deterministic(move |h: &StateHistory<usize>, a: &usize| table[*h.current()][*a]))
    }

    pub fn reaction_candidate_set<F: Scalar>(&self) -> Vec<ReactionPolicy<usize, usize, usize, F>> {
        (0..self.reaction_candidates.len()).filter_map(|i| self.reaction_candidate(i)).collect()
    }

    pub fn protector_candidate<F: Scalar>(&self, index: usize) -> Option<AgentPolicy<usize, usize, F>> {
        let table = self.protector_candidates.get(index)?.clone();
        Some(AgentPolicy::deterministic(move |h: &StateHistory<usize>| table[*h.current()]))
    }

    pub fn protector_candidate_set<F: Scalar>(&self) -> Vec<AgentPolicy<usize, usize, F>> {
        (0..self.protector_candidates.len()).filter_map(|i| self.protector_candidate(i)).collect()
    }

    /// A two-state, two-action demo: one user and one protector alternate,
    /// the system reacts stochastically and state 1 is the "good" state for
    /// the user population.
    pub fn demo() -> Self {
        Self {
            states: 2,
            initial_state: 0,
            schedule: vec![0, 1],
            actions: 2,
            reactions: 2,
            policies: vec![
                vec![vec![0.6, 0.4], vec![0.3, 0.7]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
            reaction_probs: vec![
                vec![vec![0.8, 0.2], vec![0.4, 0.6]],
                vec![vec![0.7, 0.3], vec![0.1, 0.9]],
            ],
            transitions: vec![
                vec![vec![vec![0.9, 0.1], vec![0.3, 0.7]], vec![vec![0.6, 0.4], vec![0.2, 0.8]]],
                vec![vec![vec![0.5, 0.5], vec![0.1, 0.9]], vec![vec![0.7, 0.3], vec![0.4, 0.6]]],
            ],
            system_benefit: vec![1.0, 0.2],
            agent_benefits: vec![vec![0.0, 1.0], vec![0.1, 0.8]],
            population: PopulationTable { target: vec![0, 1], combiner: Combiner::Mean },
            observation: Some(vec![vec![0.8, 0.2], vec![0.25, 0.75]]),
            reaction_candidates: vec![
                vec![vec![0, 0], vec![0, 0]],
                vec![vec![0, 1], vec![1, 0]],
                vec![vec![1, 1], vec![1, 1]],
            ],
            protector: Some(1),
            protector_candidates: vec![vec![0, 0], vec![1, 1], vec![0, 1], vec![1, 0]],
        }
    }

    /// A random game with the given sizes; probability rows are drawn from a
    /// flat Dirichlet, benefits uniformly from `[0, 10)`. Deterministic
    /// reaction and protector candidates are sampled as well.
    pub fn random(seed: u64, states: usize, actions: usize, reactions: usize, agents: usize) -> Self {
        let mut rng = seeded_rng(seed);
        let row = |n: usize, rng: &mut crate::engine::GameRng| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|x| x / total).collect()
        };
        let policies = (0..agents).map(|_| (0..states).map(|_| row(actions, &mut rng)).collect()).collect();
        let reaction_probs = (0..states).map(|_| (0..actions).map(|_| row(reactions, &mut rng)).collect()).collect();
        let transitions = (0..states)
            .map(|_| (0..actions).map(|_| (0..reactions).map(|_| row(states, &mut rng)).collect()).collect())
            .collect();
        let system_benefit = (0..states).map(|_| rng.gen::<f64>() * 10.0).collect();
        let agent_benefits = (0..agents).map(|_| (0..states).map(|_| rng.gen::<f64>() * 10.0).collect()).collect();
        let schedule = (0..agents.max(2)).map(|i| i % agents).collect();
        let reaction_candidates = (0..3)
            .map(|_| (0..states).map(|_| (0..actions).map(|_| rng.gen_range(0..reactions)).collect()).collect())
            .collect();
        let protector_candidates =
            (0..3).map(|_| (0..states).map(|_| rng.gen_range(0..actions)).collect()).collect();
        let observation = Some((0..states).map(|_| row(states, &mut rng)).collect());
        Self {
            states,
            initial_state: rng.gen_range(0..states),
            schedule,
            actions,
            reactions,
            policies,
            reaction_probs,
            transitions,
            system_benefit,
            agent_benefits,
            population: PopulationTable { target: (0..agents).collect(), combiner: Combiner::Mean },
            observation,
            reaction_candidates,
            protector: Some(agents - 1),
            protector_candidates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_and_random_games_validate() {
        TabularGame::demo().validate().unwrap();
        for seed in 0..10 {
            TabularGame::random(seed, 3, 2, 2, 2).validate().unwrap();
        }
    }

    #[test]
    fn bad_tables_are_rejected() {
        let mut g = TabularGame::demo();
        g.transitions[0][0][0] = vec![0.5, 0.4];
        assert!(g.validate().is_err());
        let mut g = TabularGame::demo();
        g.schedule = vec![5];
        assert!(g.build::<f64>().is_err());
    }
}
