//! Profile pollution by clicking every ad.
//!
//! Users take turns browsing. On each visit the ad network serves the
//! category with the best smoothed click-through rate in that user's profile,
//! (clicks + 1) / (impressions + 1), breaking ties by fewer impressions and
//! then by lower category index. Honest users click with the relevance of the
//! served category; a protector clicks everything, which keeps every rate at
//! one and sends the network round-robin through the categories.
//!
//! A user's benefit is minus the profiling accuracy: −1 when the last ad
//! served to them matches their true top interest, 0 otherwise. B_pop is the
//! mean benefit of the protector users.

use potlab_game::{
    ActionSpace, AgentId, AgentPolicy, Beneficiary, BenefitFn, Distribution, GameSpec, ObservationFn,
    PopulationBenefit, ReactionPolicy, SpaceKind, StateHistory, TransitionModel, TurnSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, WildError};
use crate::experiment::WildEnv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdUser {
    /// Click probability per category.
    pub relevance: Vec<f64>,
    #[serde(default)]
    pub protector: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdConfig {
    pub categories: usize,
    pub users: Vec<AdUser>,
}

impl Default for AdConfig {
    fn default() -> Self {
        let user = |relevance: [f64; 4], protector| AdUser { relevance: relevance.to_vec(), protector };
        Self {
            categories: 4,
            users: vec![
                user([0.05, 0.9, 0.1, 0.05], false),
                user([0.1, 0.1, 0.8, 0.2], false),
                user([0.7, 0.1, 0.1, 0.3], false),
                user([0.1, 0.2, 0.1, 0.85], true),
                user([0.05, 0.1, 0.9, 0.1], true),
            ],
        }
    }
}

impl AdConfig {
    pub fn validate(&self) -> Result<(), WildError> {
        if self.categories < 2 || self.categories > u8::MAX as usize {
            return Err(invalid(format!("categories must lie in 2..=255, got {}", self.categories)));
        }
        if self.users.is_empty() {
            return Err(invalid("at least one user is required"));
        }
        for (i, u) in self.users.iter().enumerate() {
            if u.relevance.len() != self.categories {
                return Err(invalid(format!("user {i} has {} relevances for {} categories", u.relevance.len(), self.categories)));
            }
            if u.relevance.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(format!("user {i} has a relevance outside [0, 1]")));
            }
        }
        if !self.users.iter().any(|u| u.protector) {
            return Err(invalid("at least one user must be a protector"));
        }
        Ok(())
    }

    /// True top interest of each user (lowest index on ties).
    pub fn top_interest(&self) -> Vec<u8> {
        self.users
            .iter()
            .map(|u| (0..self.categories).fold(0, |b, c| if u.relevance[c] > u.relevance[b] { c } else { b }) as u8)
            .collect()
    }

    pub fn protectors(&self) -> Vec<AgentId> {
        self.users.iter().enumerate().filter(|(_, u)| u.protector).map(|(i, _)| AgentId(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdAction {
    /// Click the served ad with probability equal to its relevance.
    Honest,
    /// Click whatever is served.
    ClickAll,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Profile {
    pub clicks: Vec<u32>,
    pub impressions: Vec<u32>,
}

impl Profile {
    fn new(categories: usize) -> Self {
        Self { clicks: vec![0; categories], impressions: vec![0; categories] }
    }

    /// Category the network serves next.
    pub fn serve(&self) -> u8 {
        let better = |a: usize, b: usize| {
            // (c_a + 1)/(i_a + 1) against (c_b + 1)/(i_b + 1), exactly
            let lhs = (self.clicks[a] as u64 + 1) * (self.impressions[b] as u64 + 1);
            let rhs = (self.clicks[b] as u64 + 1) * (self.impressions[a] as u64 + 1);
            lhs > rhs || (lhs == rhs && self.impressions[a] < self.impressions[b])
        };
        (1..self.clicks.len()).fold(0, |best, c| if better(c, best) { c } else { best }) as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdState {
    pub profiles: Vec<Profile>,
    /// Category last served to each user.
    pub last_served: Vec<Option<u8>>,
}

/// User acting at time t ≥ 1.
fn user_at(t: usize, users: usize) -> usize {
    (t - 1) % users
}

pub fn build_adnauseam_env(config: &AdConfig) -> Result<WildEnv<AdState, AdAction, u8>, WildError> {
    config.validate()?;
    let n = config.users.len();
    let top = config.top_interest();
    let initial = AdState { profiles: vec![Profile::new(config.categories); n], last_served: vec![None; n] };
    let reaction = ReactionPolicy::deterministic(move |h: &StateHistory<AdState>, _: &AdAction| {
        h.current().profiles[user_at(h.len(), n)].serve()
    });
    let relevance: Vec<Vec<f64>> = config.users.iter().map(|u| u.relevance.clone()).collect();
    let transition = TransitionModel::new(move |h: &StateHistory<AdState>, a: &AdAction, served: &u8| {
        let u = user_at(h.len(), n);
        let c = *served as usize;
        let mut seen = h.current().clone();
        seen.profiles[u].impressions[c] += 1;
        seen.last_served[u] = Some(*served);
        let mut clicked = seen.clone();
        clicked.profiles[u].clicks[c] += 1;
        let p = match a {
            AdAction::ClickAll => 1.0,
            AdAction::Honest => relevance[u][c],
        };
        if p >= 1.0 {
            Ok(Distribution::point(clicked))
        } else if p <= 0.0 {
            Ok(Distribution::point(seen))
        } else {
            Distribution::new(vec![(clicked, p), (seen, 1.0 - p)])
        }
    });
    let honest = || AgentPolicy::deterministic(|_: &StateHistory<AdState>| AdAction::Honest);
    let click_all = || AgentPolicy::deterministic(|_: &StateHistory<AdState>| AdAction::ClickAll);
    let mut builder = GameSpec::builder(initial)
        .schedule(TurnSchedule::new(move |t| AgentId(user_at(t.max(1), n))))
        .actions(ActionSpace::fixed(vec![vec![AdAction::Honest, AdAction::ClickAll]; n]))
        .reaction(reaction)
        .transition(transition)
        .observation(ObservationFn::current_state())
        .population(PopulationBenefit::mean(config.protectors()))
        .space(SpaceKind::Unbounded);
    for (i, t) in top.into_iter().enumerate() {
        builder = builder.agent(honest()).benefit(BenefitFn::new(Beneficiary::Agent(AgentId(i)), move |s: &AdState| {
            if s.last_served[i] == Some(t) {
                -1.0
            } else {
                0.0
            }
        }));
    }
    let game = builder.build()?;
    let protectors = config.protectors().into_iter().map(|a| (a, click_all(), honest())).collect();
    Ok(WildEnv { name: "adnauseam", game, protectors })
}
