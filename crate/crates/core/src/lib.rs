//! Credit-scoring case study: the German credit data and its encoding, an
//! RBF support vector machine, and the two protective strategies run against
//! it (evasion by the applicant, poisoning by a group of protectors).
//!
//! The classifier is generic over the scalar type; the aliases below fix it
//! to `f64`, which the rest of the pipeline uses.

pub mod credit;
mod error;
pub mod pots;
pub mod svm;

pub use error::{DataError, PotError, SvmError};

pub type SvmModel64 = svm::SvmModel<f64>;
pub type SvmModel32 = svm::SvmModel<f32>;
pub type LabeledSet64 = svm::LabeledSet<f64>;
pub type TrainConfig64 = svm::TrainConfig<f64>;
pub type IncrementalTrainer64 = svm::IncrementalTrainer<f64>;
