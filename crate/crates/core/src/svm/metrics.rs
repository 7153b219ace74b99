use serde::{Deserialize, Serialize};

use potlab_game::Scalar;

use super::model::{Decision, LabeledSet, SvmModel};
use crate::error::SvmError;

/// Test-set metrics with the positive class = repaid / accept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Accepted and repaid.
    pub true_positive: usize,
    /// Accepted but defaulted.
    pub false_positive: usize,
    /// Denied and defaulted.
    pub true_negative: usize,
    /// Denied but repaid.
    pub false_negative: usize,
}

impl Metrics {
    /// Precision is 0 when nothing is accepted; recall is 0 when nobody repaid.
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Metrics {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            true_positive: tp,
            false_positive: fp,
            true_negative: tn,
            false_negative: fn_,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }
}

/// Tallies accept/deny decisions against labels (−1 = repaid).
pub fn metrics_from_decisions(decisions: &[Decision], labels: &[i8]) -> Metrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (d, y) in decisions.iter().zip(labels) {
        match (d, *y < 0) {
            (Decision::Accept, true) => tp += 1,
            (Decision::Accept, false) => fp += 1,
            (Decision::Deny, false) => tn += 1,
            (Decision::Deny, true) => fn_ += 1,
        }
    }
    Metrics::from_counts(tp, fp, tn, fn_)
}

pub fn evaluate<F: Scalar>(model: &SvmModel<F>, test: &LabeledSet<F>) -> Result<Metrics, SvmError> {
    if test.is_empty() {
        return Err(SvmError::InvalidArgument("empty test set".into()));
    }
    let decisions = test.inputs().iter().map(|x| model.predict(x).map(|p| p.decision)).collect::<Result<Vec<_>, _>>()?;
    Ok(metrics_from_decisions(&decisions, test.labels()))
}
