//! Soft-margin SVM with an RBF kernel, trained by SMO.
//!
//! Labels are +1 for default and −1 for repaid, so a positive margin means
//! the model expects a default and the application is denied.

mod cv;
mod incremental;
mod kernel;
mod metrics;
mod model;
mod smo;

pub use cv::{cross_validate, default_grid, stratified_folds, CvResult, GridPoint, GridScore, DEFAULT_FOLDS, REFOLD_ATTEMPTS};
pub use incremental::{IncrementalTrainer, ProbeSet};
pub use kernel::{rbf_kernel, Gram};
pub use metrics::{evaluate, metrics_from_decisions, Metrics};
pub use model::{
    decide, retrain, train_smo, Decision, KernelParams, LabeledSet, Prediction, SvmModel, TrainConfig, DEFAULT_MAX_PASSES,
    DEFAULT_TOL, MODEL_FORMAT,
};
