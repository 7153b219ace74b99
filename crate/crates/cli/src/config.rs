//! Run configuration files.
//!
//! A config is a TOML document. Relative paths are resolved against the
//! directory holding the config file. Every seed must be written out; nothing
//! falls back to a clock or a built-in default.
//!
//! ```toml
//! [data]
//! path = "../data/german_credit.csv"
//! schema = "mapping.txt"            # optional column renames
//! split_seed = 0
//!
//! [train]
//! folds = 5
//! c = [0.1, 1.0, 10.0, 100.0]       # optional; both lists or neither
//! gamma = [0.01, 0.05, 0.5]
//!
//! [evade]
//! budgets = [1, 2, 3]
//!
//! [poison]
//! protectors = 5
//! batch_size = 10
//! max_changes = 3
//! retry_limit = 10
//! seeds = [0, 1, 2]
//!
//! [wild]
//! env = "uber"
//! dynamics = "illustrative"
//! horizon = 40
//! seeds = { first = 0, count = 100 }
//! [wild.uber]                       # environment parameters, all optional
//!
//! [value]
//! game = "demo"                     # or "table" with a [value.table] section
//! gamma = 0.9
//! horizon = 3
//! samples = 100000
//! seed = 7
//!
//! [output]
//! dir = "../out/credit"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use potlab_game::TabularGame;
use potlab_wild::{AdConfig, PokemonConfig, UberConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<DataSection>,
    pub train: Option<TrainSection>,
    pub evade: Option<EvadeSection>,
    pub poison: Option<PoisonSection>,
    pub wild: Option<WildSection>,
    pub value: Option<ValueSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub schema: Option<PathBuf>,
    pub split_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub c: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
}

fn default_folds() -> usize {
    potlab_core::svm::DEFAULT_FOLDS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvadeSection {
    pub budgets: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoisonSection {
    pub protectors: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_changes")]
    pub max_changes: usize,
    #[serde(default = "default_retries")]
    pub retry_limit: usize,
    pub seeds: Vec<u64>,
}

fn default_batch() -> usize {
    potlab_core::pots::DEFAULT_BATCH_SIZE
}

fn default_changes() -> usize {
    potlab_core::pots::DEFAULT_POISON_CHANGES
}

fn default_retries() -> usize {
    potlab_core::pots::DEFAULT_RETRY_LIMIT
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub first: u64,
    pub count: u64,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.first..self.first + self.count).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WildSection {
    pub env: String,
    /// Must read "illustrative": the environment dynamics are invented.
    pub dynamics: String,
    pub horizon: usize,
    pub seeds: SeedRange,
    pub uber: Option<UberConfig>,
    pub pokemon: Option<PokemonConfig>,
    pub adnauseam: Option<AdConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueSection {
    pub game: String,
    pub table: Option<TabularGame>,
    pub gamma: f64,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// A parsed config together with its origin and content hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub sha256: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config(format!("{} is not valid UTF-8", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut config.data {
            resolve(&mut d.path);
            if let Some(s) = &mut d.schema {
                resolve(s);
            }
        }
        if let Some(o) = &mut config.output {
            resolve(&mut o.dir);
        }
        Ok(Self { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&bytes)), config })
    }

    pub fn data(&self) -> Result<&DataSection, CliError> {
        section(&self.config.data, "data")
    }

    pub fn poison(&self) -> Result<&PoisonSection, CliError> {
        section(&self.config.poison, "poison")
    }

    pub fn wild(&self) -> Result<&WildSection, CliError> {
        section(&self.config.wild, "wild")
    }

    pub fn value(&self) -> Result<&ValueSection, CliError> {
        section(&self.config.value, "value")
    }

    pub fn evade(&self) -> Result<&EvadeSection, CliError> {
        section(&self.config.evade, "evade")
    }

    /// `--out` wins over `[output] dir`.
    pub fn out_dir(&self, cli_out: Option<&Path>) -> Result<PathBuf, CliError> {
        match (cli_out, &self.config.output) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(o)) => Ok(o.dir.clone()),
            (None, None) => Err(CliError::Config("no output directory: pass --out or set [output] dir".into())),
        }
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}
