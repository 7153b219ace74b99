//! Evasion: the applicant searches the transformation neighbourhood of their
//! own application for the largest loan the model still accepts.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::credit::{Encoder, FeatureCodes, Group};
use crate::error::PotError;
use crate::svm::{Decision, SvmModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvasionResult {
    pub original: FeatureCodes,
    pub chosen: FeatureCodes,
    pub features_changed: usize,
    /// Bin-midpoint amount of `chosen` minus that of `original`; 0 when nothing is accepted.
    pub amount_gain: f64,
    pub accepted: bool,
}

/// Model decision on every application within `max_changes` of `codes`,
/// the unchanged application first.
pub(crate) struct Neighbourhood {
    original: FeatureCodes,
    scored: Vec<(FeatureCodes, usize, bool)>,
}

impl Neighbourhood {
    pub fn score(model: &SvmModel<f64>, encoder: &Encoder, codes: &FeatureCodes, max_changes: usize) -> Result<Self, PotError> {
        let mut scored = Vec::new();
        for t in std::iter::once(*codes).chain(encoder.transformations(codes, max_changes)) {
            let accepted = model.predict(&encoder.vector::<f64>(&t))?.decision == Decision::Accept;
            scored.push((t, t.changes_from(codes), accepted));
        }
        Ok(Self { original: *codes, scored })
    }

    pub fn original_accepted(&self) -> bool {
        self.scored[0].2
    }

    /// Best accepted application using at most `budget` changes: largest
    /// amount, then fewest changes, then lexicographically smallest encoding.
    pub fn best(&self, encoder: &Encoder, budget: usize) -> EvasionResult {
        let amount = |c: &FeatureCodes| encoder.amount_value(c.get(Group::Amount));
        let mut best: Option<&(FeatureCodes, usize, bool)> = None;
        for cand in self.scored.iter().filter(|(_, changes, ok)| *ok && *changes <= budget) {
            let better = match best {
                None => true,
                Some(b) => match amount(&cand.0).total_cmp(&amount(&b.0)) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => match cand.1.cmp(&b.1) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => encoder.bits(&cand.0) < encoder.bits(&b.0),
                    },
                },
            };
            if better {
                best = Some(cand);
            }
        }
        match best {
            Some((chosen, changes, _)) => EvasionResult {
                original: self.original,
                chosen: *chosen,
                features_changed: *changes,
                amount_gain: amount(chosen) - amount(&self.original),
                accepted: true,
            },
            None => EvasionResult {
                original: self.original,
                chosen: self.original,
                features_changed: 0,
                amount_gain: 0.0,
                accepted: false,
            },
        }
    }
}

/// Exhaustive search of `transformations(codes, max_changes)` plus the
/// unchanged application.
pub fn evade(
    model: &SvmModel<f64>,
    encoder: &Encoder,
    codes: &FeatureCodes,
    max_changes: usize,
) -> Result<EvasionResult, PotError> {
    Ok(Neighbourhood::score(model, encoder, codes, max_changes)?.best(encoder, max_changes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub record_id: usize,
    pub budget: usize,
    /// Whether the unchanged application is denied.
    pub denied: bool,
    pub gain: f64,
    pub features_changed: usize,
    pub accepted: bool,
}

/// Best gain per record and budget. Records the model already accepts are
/// reported with zero gain and no change.
pub fn evade_cohort(
    model: &SvmModel<f64>,
    encoder: &Encoder,
    records: &[(usize, FeatureCodes)],
    budgets: &[usize],
) -> Result<Vec<CohortRow>, PotError> {
    let widest = budgets.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::with_capacity(records.len() * budgets.len());
    for (id, codes) in records {
        let hood = Neighbourhood::score(model, encoder, codes, widest)?;
        let denied = !hood.original_accepted();
        for &budget in budgets {
            let row = if denied {
                let r = hood.best(encoder, budget);
                CohortRow { record_id: *id, budget, denied, gain: r.amount_gain, features_changed: r.features_changed, accepted: r.accepted }
            } else {
                CohortRow { record_id: *id, budget, denied, gain: 0.0, features_changed: 0, accepted: true }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Distribution of gains over denied records for one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub budget: usize,
    pub denied: usize,
    pub flipped: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted values.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(rows: &[CohortRow], budgets: &[usize]) -> Vec<BudgetSummary> {
    budgets
        .iter()
        .map(|&budget| {
            let sel: Vec<&CohortRow> = rows.iter().filter(|r| r.budget == budget && r.denied).collect();
            let mut gains: Vec<f64> = sel.iter().map(|r| r.gain).collect();
            gains.sort_by(f64::total_cmp);
            let mean = if gains.is_empty() { f64::NAN } else { gains.iter().sum::<f64>() / gains.len() as f64 };
            BudgetSummary {
                budget,
                denied: sel.len(),
                flipped: sel.iter().filter(|r| r.accepted).count(),
                min: quantile(&gains, 0.0),
                q1: quantile(&gains, 0.25),
                median: quantile(&gains, 0.5),
                q3: quantile(&gains, 0.75),
                max: quantile(&gains, 1.0),
                mean,
            }
        })
        .collect()
}
