//! Induced surge pricing.
//!
//! A coalition of protector drivers shares the road with always-online
//! honest drivers. Each step the coalition chooses to be online or offline,
//! the platform quotes a price, waiting riders are matched to online drivers
//! and new riders arrive. The platform sees the supply left by the previous
//! step, so drivers who return after an absence are paid the surge price
//! their absence caused.

use potlab_game::{
    ActionSpace, AgentId, AgentPolicy, Beneficiary, BenefitFn, Distribution, GameSpec, ObservationFn,
    PopulationBenefit, ReactionPolicy, StateHistory, TransitionModel, TurnSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, WildError};
use crate::experiment::WildEnv;

/// The protector coalition.
pub const COALITION: AgentId = AgentId(0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UberConfig {
    pub honest_drivers: u32,
    /// Drivers in the coalition.
    pub protectors: u32,
    /// Mean rider arrivals per step.
    pub arrival_rate: f64,
    /// Arrivals are Binomial(arrival_cap, arrival_rate / arrival_cap).
    pub arrival_cap: u32,
    pub base_price: f64,
    /// m > 1
    pub surge_multiplier: f64,
    /// ρ: surge iff online drivers / max(1, waiting riders) < ρ
    pub surge_threshold: f64,
    /// Steps offline per cycle of the protective policy.
    pub off_duration: u32,
    /// Steps online per cycle of the protective policy.
    pub on_duration: u32,
    /// Riders beyond this many leave the queue.
    pub waiting_cap: u32,
}

impl Default for UberConfig {
    fn default() -> Self {
        Self {
            honest_drivers: 4,
            protectors: 6,
            arrival_rate: 6.0,
            arrival_cap: 12,
            base_price: 1.0,
            surge_multiplier: 2.0,
            surge_threshold: 0.8,
            off_duration: 1,
            on_duration: 1,
            waiting_cap: 60,
        }
    }
}

impl UberConfig {
    pub fn validate(&self) -> Result<(), WildError> {
        if self.protectors == 0 {
            return Err(invalid("protectors must be at least 1"));
        }
        if !(self.surge_multiplier > 1.0 && self.surge_multiplier.is_finite()) {
            return Err(invalid(format!("surge_multiplier must exceed 1, got {}", self.surge_multiplier)));
        }
        if !(self.surge_threshold > 0.0 && self.surge_threshold < 1.0) {
            return Err(invalid(format!("surge_threshold must lie in (0, 1), got {}", self.surge_threshold)));
        }
        if !(self.base_price > 0.0 && self.base_price.is_finite()) {
            return Err(invalid(format!("base_price must be positive, got {}", self.base_price)));
        }
        if self.arrival_cap == 0 || !(self.arrival_rate > 0.0 && self.arrival_rate <= self.arrival_cap as f64) {
            return Err(invalid(format!(
                "arrival_rate must lie in (0, arrival_cap = {}], got {}",
                self.arrival_cap, self.arrival_rate
            )));
        }
        if self.off_duration == 0 || self.on_duration == 0 {
            return Err(invalid("off_duration and on_duration must be at least 1"));
        }
        if self.waiting_cap == 0 {
            return Err(invalid("waiting_cap must be at least 1"));
        }
        Ok(())
    }

    /// Price quoted for `online` drivers facing `waiting` riders.
    pub fn quote(&self, online: u32, waiting: u32) -> Price {
        if (online as f64) < self.surge_threshold * waiting.max(1) as f64 {
            Price::Surge
        } else {
            Price::Base
        }
    }

    fn online_drivers(&self, coalition_online: bool) -> u32 {
        self.honest_drivers + if coalition_online { self.protectors } else { 0 }
    }

    /// Arrival count distribution.
    pub fn arrivals(&self) -> Vec<(u32, f64)> {
        let n = self.arrival_cap;
        let p = self.arrival_rate / n as f64;
        if p >= 1.0 {
            return vec![(n, 1.0)];
        }
        let mut out = Vec::with_capacity(n as usize + 1);
        let mut pmf = (1.0 - p).powi(n as i32);
        for k in 0..=n {
            out.push((k, pmf));
            pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DriverAction {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Price {
    Base,
    Surge,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UberState {
    /// Whether the coalition was online during the last step.
    pub coalition_online: bool,
    pub waiting: u32,
    /// Rides served by coalition drivers in the last step.
    pub protector_rides: u32,
    pub total_rides: u32,
    pub surge: bool,
}

impl UberState {
    pub fn initial(config: &UberConfig) -> Self {
        Self {
            coalition_online: true,
            waiting: (config.arrival_rate.round() as u32).min(config.waiting_cap),
            protector_rides: 0,
            total_rides: 0,
            surge: false,
        }
    }
}

/// Fare per ride in `state`'s last step.
fn fare(config: &UberConfig, state: &UberState) -> f64 {
    config.base_price * if state.surge { config.surge_multiplier } else { 1.0 }
}

/// Per-protector earnings in the last step.
pub fn protector_earnings(config: &UberConfig, state: &UberState) -> f64 {
    state.protector_rides as f64 * fare(config, state) / config.protectors as f64
}

/// The protective cycle: offline for `off_duration` steps, then online for
/// `on_duration`, starting offline at step 1.
pub fn cycle_action(config: &UberConfig, step: usize) -> DriverAction {
    let period = (config.off_duration + config.on_duration) as usize;
    if (step - 1) % period < config.off_duration as usize {
        DriverAction::Off
    } else {
        DriverAction::On
    }
}

/// The coalition is the only acting agent. Its benefit is the per-protector
/// fare income of each step, the platform's is total fares, and B_pop is the
/// coalition's benefit.
pub fn build_uber_env(config: &UberConfig) -> Result<WildEnv<UberState, DriverAction, Price>, WildError> {
    config.validate()?;
    let cfg = *config;
    let arrivals = cfg.arrivals();
    let reaction = ReactionPolicy::deterministic(move |h: &StateHistory<UberState>, _: &DriverAction| {
        let s = h.current();
        cfg.quote(cfg.online_drivers(s.coalition_online), s.waiting)
    });
    let transition = TransitionModel::new(move |h: &StateHistory<UberState>, a: &DriverAction, r: &Price| {
        let s = h.current();
        let online = *a == DriverAction::On;
        let active = cfg.online_drivers(online);
        let served = active.min(s.waiting);
        let protector_rides = if online && active > 0 { served * cfg.protectors / active } else { 0 };
        let left = s.waiting - served;
        Distribution::new(
            arrivals
                .iter()
                .map(|(k, p)| {
                    let next = UberState {
                        coalition_online: online,
                        waiting: (left + k).min(cfg.waiting_cap),
                        protector_rides,
                        total_rides: served,
                        surge: *r == Price::Surge,
                    };
                    (next, *p)
                })
                .collect(),
        )
    });
    let always_on = || AgentPolicy::deterministic(|_: &StateHistory<UberState>| DriverAction::On);
    let pot = AgentPolicy::deterministic(move |h: &StateHistory<UberState>| cycle_action(&cfg, h.len()));
    let game = GameSpec::builder(UberState::initial(&cfg))
        .schedule(TurnSchedule::constant(COALITION))
        .actions(ActionSpace::fixed(vec![vec![DriverAction::On, DriverAction::Off]]))
        .agent(always_on())
        .reaction(reaction)
        .transition(transition)
        .observation(ObservationFn::current_state())
        .benefit(BenefitFn::new(Beneficiary::System, move |s: &UberState| s.total_rides as f64 * fare(&cfg, s)))
        .benefit(BenefitFn::new(Beneficiary::Agent(COALITION), move |s: &UberState| protector_earnings(&cfg, s)))
        .population(PopulationBenefit::single(COALITION))
        .build()?;
    Ok(WildEnv { name: "uber", game, protectors: vec![(COALITION, pot, always_on())] })
}
