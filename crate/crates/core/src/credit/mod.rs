//! German credit data: loading, encoding, splitting and target-group
//! selection.

mod encoding;
mod record;

pub use encoding::{
    DecodedRecord, Encoder, FeatureCodes, Group, QuantileBinner, DEFAULT_BINS, GROUPS, GROUP_NAMES, MUTABLE,
};
pub use record::{
    load_dataset, load_records, read_records, verify_canonical, ApplicantRecord, Category, Checking, Housing, Job,
    Outcome, Purpose, Savings, SchemaMapping, Sex, CANONICAL_DEFAULTS, CANONICAL_ROWS, COLUMNS,
};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, PotError};
use crate::svm::{Decision, SvmModel};

pub const TRAIN_SIZE: usize = 900;
pub const TEST_SIZE: usize = 100;

/// Record ids are row positions in the loaded dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

impl DatasetSplit {
    pub fn train<'a>(&self, records: &'a [ApplicantRecord]) -> Vec<&'a ApplicantRecord> {
        self.train_ids.iter().map(|i| &records[*i]).collect()
    }

    pub fn test<'a>(&self, records: &'a [ApplicantRecord]) -> Vec<&'a ApplicantRecord> {
        self.test_ids.iter().map(|i| &records[*i]).collect()
    }

    pub fn train_records(&self, records: &[ApplicantRecord]) -> Vec<ApplicantRecord> {
        self.train(records).into_iter().cloned().collect()
    }
}

/// Uniform random permutation of the 1000 records; the first 900 train.
pub fn split_dataset(records: &[ApplicantRecord], seed: u64) -> Result<DatasetSplit, DataError> {
    if records.len() != TRAIN_SIZE + TEST_SIZE {
        return Err(DataError::InvalidInput(format!(
            "split needs {} records, got {}",
            TRAIN_SIZE + TEST_SIZE,
            records.len()
        )));
    }
    let mut ids: Vec<usize> = (0..records.len()).collect();
    ids.shuffle(&mut potlab_game::seeded_rng(seed));
    let test_ids = ids.split_off(TRAIN_SIZE);
    Ok(DatasetSplit { seed, train_ids: ids, test_ids })
}

/// +1 for default, -1 for repaid.
pub fn svm_label(outcome: Outcome) -> i8 {
    match outcome {
        Outcome::Default => 1,
        Outcome::Repaid => -1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetGroup {
    pub ids: Vec<usize>,
}

impl TargetGroup {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }
}

/// Records with little funds in both accounts that repaid in reality but
/// are denied by `model`. May be empty.
pub fn select_target_group(
    records: &[ApplicantRecord],
    encoder: &Encoder,
    model: &SvmModel<f64>,
) -> Result<TargetGroup, PotError> {
    let mut ids = Vec::new();
    for (id, r) in records.iter().enumerate() {
        if !r.has_little_funds() || r.label != Outcome::Repaid {
            continue;
        }
        let x = encoder.encode::<f64>(r)?;
        if model.predict(&x)?.decision == Decision::Deny {
            ids.push(id);
        }
    }
    Ok(TargetGroup { ids })
}
