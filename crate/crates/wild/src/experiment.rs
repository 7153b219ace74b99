//! Running an environment with and without its protective policy.

use potlab_game::{simulate, AgentId, AgentPolicy, Game64, Move, Trajectory64, WorldState};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, WildError};

/// (protector, strategy policy, baseline policy)
pub type ProtectorPolicies<S, A> = (AgentId, AgentPolicy<S, A, f64>, AgentPolicy<S, A, f64>);

/// A game together with the policies its protectors follow with and
/// without the protective strategy.
pub struct WildEnv<S, A, R> {
    pub name: &'static str,
    pub game: Game64<S, A, R, S>,
    pub protectors: Vec<ProtectorPolicies<S, A>>,
}

impl<S: WorldState, A: Move, R: Move> WildEnv<S, A, R> {
    /// The game with every protector on its strategy (`with_pot`) or baseline policy.
    pub fn game(&self, with_pot: bool) -> Result<Game64<S, A, R, S>, WildError> {
        let mut game = self.game.clone();
        for (agent, pot, baseline) in &self.protectors {
            game = game.with_policy(*agent, if with_pot { pot.clone() } else { baseline.clone() })?;
        }
        Ok(game)
    }

    pub fn trajectory(&self, with_pot: bool, horizon: usize, seed: u64) -> Result<Trajectory64<S, A, R>, WildError> {
        Ok(simulate(&self.game(with_pot)?, horizon, seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Σ_t B_pop(s_t)
    pub total_population: f64,
    /// total_population / horizon
    pub mean_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitSummary {
    pub env: String,
    pub with_pot: bool,
    pub horizon: usize,
    pub runs: Vec<RunSummary>,
    /// Mean over runs of the per-step population benefit.
    pub mean_population: f64,
}

pub fn summarize_trajectory<S, A, R>(trajectory: &Trajectory64<S, A, R>) -> RunSummary {
    let total: f64 = trajectory.steps.iter().map(|s| s.population).sum();
    RunSummary {
        seed: trajectory.seed,
        total_population: total,
        mean_population: total / trajectory.steps.len().max(1) as f64,
    }
}

/// Simulates `horizon` steps for each seed and averages B_pop.
pub fn run_wild_experiment<S: WorldState, A: Move, R: Move>(
    env: &WildEnv<S, A, R>,
    with_pot: bool,
    horizon: usize,
    seeds: &[u64],
) -> Result<BenefitSummary, WildError> {
    if seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    let game = env.game(with_pot)?;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        runs.push(summarize_trajectory(&simulate(&game, horizon, seed)?));
    }
    let mean_population = runs.iter().map(|r| r.mean_population).sum::<f64>() / runs.len() as f64;
    Ok(BenefitSummary { env: env.name.to_string(), with_pot, horizon, runs, mean_population })
}
