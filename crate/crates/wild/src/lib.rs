//! Three toy optimization systems with protective strategies, each built as
//! a plain [`GameSpec`](potlab_game::GameSpec) and run by the generic engine:
//!
//! - [`uber`]: drivers go offline together to trigger surge pricing.
//! - [`pokemon`]: a player adds map features near home to attract spawns.
//! - [`adnauseam`]: a user clicks every ad so the profile carries no signal.
//!
//! The dynamics are illustrative and were chosen to be as small as possible
//! while still expressing each strategy.

pub mod adnauseam;
mod error;
pub mod experiment;
pub mod pokemon;
pub mod uber;

pub use adnauseam::{build_adnauseam_env, AdAction, AdConfig, AdState, AdUser};
pub use error::WildError;
pub use experiment::{run_wild_experiment, BenefitSummary, ProtectorPolicies, RunSummary, WildEnv};
pub use pokemon::{build_pokemon_env, PokemonAction, PokemonConfig, PokemonState, FEATURE_KINDS};
pub use uber::{build_uber_env, DriverAction, Price, UberConfig, UberState};

/// Environment names accepted by the harness.
pub const ENV_NAMES: [&str; 3] = ["uber", "pokemon", "adnauseam"];
