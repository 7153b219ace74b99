//! Spawn encouragement.
//!
//! The game spawns one creature per step in a grid cell drawn in proportion
//! to the weighted map features of each cell. A protector may add features
//! to the map, up to an edit budget, and benefits from spawns in its home
//! cell.

use potlab_game::{
    ActionSpace, AgentId, AgentPolicy, Beneficiary, BenefitFn, Distribution, GameSpec, ObservationFn,
    PopulationBenefit, ReactionPolicy, StateHistory, TransitionModel, TurnSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, WildError};
use crate::experiment::WildEnv;

pub const PROTECTOR: AgentId = AgentId(0);

/// Footpath, swimming pool, park.
pub const FEATURE_KINDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PokemonConfig {
    pub width: usize,
    pub height: usize,
    /// Row-major feature counts per cell, one entry per kind.
    pub features: Vec<[u32; FEATURE_KINDS]>,
    /// Spawn weight contributed by one feature of each kind.
    pub weights: [f64; FEATURE_KINDS],
    pub home: usize,
    pub budget: u32,
}

impl Default for PokemonConfig {
    fn default() -> Self {
        Self {
            width: 3,
            height: 3,
            features: vec![[2, 1, 0], [1, 0, 1], [0, 2, 0], [1, 1, 1], [1, 0, 0], [0, 0, 2], [2, 0, 0], [1, 1, 0], [0, 1, 1]],
            weights: [1.0, 2.0, 3.0],
            home: 4,
            budget: 5,
        }
    }
}

impl PokemonConfig {
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<(), WildError> {
        if self.cells() == 0 {
            return Err(invalid("grid must have at least one cell"));
        }
        if self.features.len() != self.cells() {
            return Err(invalid(format!("{} feature rows for {} cells", self.features.len(), self.cells())));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("feature weights must be finite and non-negative"));
        }
        if self.home >= self.cells() {
            return Err(invalid(format!("home cell {} outside the {}-cell grid", self.home, self.cells())));
        }
        if self.cell_weights(&self.features).iter().sum::<f64>() <= 0.0 {
            return Err(invalid("the map has no spawn weight"));
        }
        Ok(())
    }

    pub fn cell_weights(&self, features: &[[u32; FEATURE_KINDS]]) -> Vec<f64> {
        features.iter().map(|f| f.iter().zip(&self.weights).map(|(n, w)| *n as f64 * w).sum()).collect()
    }

    /// Normalized spawn probability of each cell.
    pub fn spawn_probabilities(&self, features: &[[u32; FEATURE_KINDS]]) -> Vec<f64> {
        let w = self.cell_weights(features);
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    /// The most valuable feature kind (lowest index on ties).
    pub fn best_kind(&self) -> usize {
        (0..FEATURE_KINDS).fold(0, |best, k| if self.weights[k] > self.weights[best] { k } else { best })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PokemonAction {
    Pass,
    AddFeature { cell: usize, kind: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PokemonState {
    pub features: Vec<[u32; FEATURE_KINDS]>,
    pub edits: u32,
    /// Cell of the most recent spawn.
    pub last_spawn: Option<usize>,
}

fn apply(state: &PokemonState, action: &PokemonAction) -> PokemonState {
    let mut next = state.clone();
    if let PokemonAction::AddFeature { cell, kind } = *action {
        next.features[cell][kind] += 1;
        next.edits += 1;
    }
    next
}

/// Spawns follow the feature weights after the step's edit; the
/// protector's benefit is 1 for a spawn in its home cell.
pub fn build_pokemon_env(config: &PokemonConfig) -> Result<WildEnv<PokemonState, PokemonAction, usize>, WildError> {
    config.validate()?;
    let cfg = config.clone();
    let initial = PokemonState { features: cfg.features.clone(), edits: 0, last_spawn: None };
    let (cells, budget) = (cfg.cells(), cfg.budget);
    let actions = ActionSpace::new(move |_, h: &StateHistory<PokemonState>| {
        let mut out = vec![PokemonAction::Pass];
        if h.current().edits < budget {
            for cell in 0..cells {
                for kind in 0..FEATURE_KINDS {
                    out.push(PokemonAction::AddFeature { cell, kind });
                }
            }
        }
        out
    });
    let spawn_cfg = cfg.clone();
    let reaction = ReactionPolicy::new(move |h: &StateHistory<PokemonState>, a: &PokemonAction| {
        let next = apply(h.current(), a);
        Distribution::from_weights(spawn_cfg.cell_weights(&next.features).into_iter().enumerate().collect())
    });
    let transition = TransitionModel::deterministic(|h: &StateHistory<PokemonState>, a: &PokemonAction, r: &usize| {
        let mut next = apply(h.current(), a);
        next.last_spawn = Some(*r);
        next
    });
    let (home, kind) = (cfg.home, cfg.best_kind());
    let pot = AgentPolicy::deterministic(move |h: &StateHistory<PokemonState>| {
        if h.current().edits < budget {
            PokemonAction::AddFeature { cell: home, kind }
        } else {
            PokemonAction::Pass
        }
    });
    let pass = || AgentPolicy::deterministic(|_: &StateHistory<PokemonState>| PokemonAction::Pass);
    let game = GameSpec::builder(initial)
        .schedule(TurnSchedule::constant(PROTECTOR))
        .actions(actions)
        .agent(pass())
        .reaction(reaction)
        .transition(transition)
        .observation(ObservationFn::current_state())
        .benefit(BenefitFn::new(Beneficiary::Agent(PROTECTOR), move |s: &PokemonState| {
            if s.last_spawn == Some(home) {
                1.0
            } else {
                0.0
            }
        }))
        .population(PopulationBenefit::single(PROTECTOR))
        .build()?;
    Ok(WildEnv { name: "pokemon", game, protectors: vec![(PROTECTOR, pot, pass())] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_normalize() {
        let c = PokemonConfig::default();
        let p = c.spawn_probabilities(&c.features);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(c.best_kind(), 2);
    }

    #[test]
    fn rejects_bad_grids() {
        let c = PokemonConfig::default();
        assert!(build_pokemon_env(&PokemonConfig { home: 9, ..c.clone() }).is_err());
        assert!(build_pokemon_env(&PokemonConfig { features: vec![[0; 3]; 9], ..c.clone() }).is_err());
        assert!(build_pokemon_env(&PokemonConfig { width: 2, ..c.clone() }).is_err());
        assert!(build_pokemon_env(&PokemonConfig { weights: [1.0, -1.0, 0.0], ..c }).is_err());
    }
}
