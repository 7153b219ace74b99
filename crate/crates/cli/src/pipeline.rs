//! The credit pipeline shared by the commands: split, encode, select
//! hyperparameters, train and evaluate.

use potlab_core::credit::{split_dataset, svm_label, ApplicantRecord, DatasetSplit, Encoder};
use potlab_core::svm::{
    cross_validate, default_grid, evaluate, train_smo, CvResult, GridPoint, KernelParams, LabeledSet, Metrics,
    SvmModel, TrainConfig, DEFAULT_FOLDS,
};

use crate::config::TrainSection;
use crate::error::CliError;

pub struct Prepared {
    pub split: DatasetSplit,
    pub encoder: Encoder,
    pub train: LabeledSet<f64>,
    pub test: LabeledSet<f64>,
}

pub fn encode_set(records: &[ApplicantRecord], ids: &[usize], encoder: &Encoder) -> Result<LabeledSet<f64>, CliError> {
    let mut x = Vec::with_capacity(ids.len());
    for i in ids {
        x.push(encoder.encode::<f64>(&records[*i])?);
    }
    let y = ids.iter().map(|i| svm_label(records[*i].label)).collect();
    Ok(LabeledSet::new(x, y)?)
}

/// Splits by `seed` and fits the encoder on the training part only.
pub fn prepare(records: &[ApplicantRecord], seed: u64) -> Result<Prepared, CliError> {
    let split = split_dataset(records, seed)?;
    let encoder = Encoder::fit(&split.train_records(records))?;
    let train = encode_set(records, &split.train_ids, &encoder)?;
    let test = encode_set(records, &split.test_ids, &encoder)?;
    Ok(Prepared { split, encoder, train, test })
}

pub fn grid(section: Option<&TrainSection>, dim: usize) -> Result<Vec<GridPoint<f64>>, CliError> {
    match section.map(|s| (&s.c, &s.gamma)) {
        Some((Some(cs), Some(gammas))) => {
            Ok(cs.iter().flat_map(|c| gammas.iter().map(move |g| GridPoint { c: *c, gamma: *g })).collect())
        }
        Some((None, None)) | None => Ok(default_grid(dim)),
        _ => Err(CliError::Config("[train] needs both `c` and `gamma` lists, or neither".into())),
    }
}

pub struct Classifier {
    pub cv: CvResult<f64>,
    pub model: SvmModel<f64>,
    pub metrics: Metrics,
}

/// Cross-validates on the training set (folds seeded by `seed`), retrains
/// the best grid point on the whole training set and scores the test set.
pub fn fit_classifier(prep: &Prepared, section: Option<&TrainSection>, seed: u64) -> Result<Classifier, CliError> {
    let folds = section.map_or(DEFAULT_FOLDS, |s| s.folds);
    let grid = grid(section, prep.train.dim())?;
    let base = TrainConfig::new(1.0, 1.0);
    let cv = cross_validate(&prep.train, &grid, folds, seed, &base)?;
    let config = TrainConfig { c: cv.best.c, kernel: KernelParams { gamma: cv.best.gamma }, ..base };
    let model = train_smo(&prep.train, &config)?;
    let metrics = evaluate(&model, &prep.test)?;
    Ok(Classifier { cv, model, metrics })
}
