use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use potlab_game::Scalar;

use super::kernel::Gram;
use super::model::{decide, problem, Decision, LabeledSet, TrainConfig};
use crate::error::SvmError;

pub const DEFAULT_FOLDS: usize = 5;
pub const REFOLD_ATTEMPTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<F> {
    pub c: F,
    pub gamma: F,
}

/// C ∈ {0.1, 1, 10, 100} × γ ∈ {0.01, 0.05, 1/d, 0.5}.
pub fn default_grid<F: Scalar>(dim: usize) -> Vec<GridPoint<F>> {
    let mut out = Vec::new();
    for c in [0.1, 1.0, 10.0, 100.0] {
        for gamma in [0.01, 0.05, 1.0 / dim.max(1) as f64, 0.5] {
            out.push(GridPoint { c: F::lit(c), gamma: F::lit(gamma) });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub c: f64,
    pub gamma: f64,
    pub mean_accuracy: f64,
    pub fold_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult<F> {
    pub best: GridPoint<F>,
    /// Scores in grid order sorted by (C, γ); empty for a one-point grid.
    pub scores: Vec<GridScore>,
    /// Seed that produced the folds (differs from the requested one after a refold).
    pub fold_seed: u64,
}

/// Deals each class, shuffled, round-robin into `k` folds. The negative class
/// continues the round where the positive class stopped, so fold sizes and
/// per-class counts each differ by at most one.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = potlab_game::seeded_rng(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] > 0).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] <= 0).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (slot, i) in pos.iter().chain(&neg).enumerate() {
        folds[slot % k].push(*i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

fn folds_usable(labels: &[i8], folds: &[Vec<usize>]) -> bool {
    folds.iter().all(|f| {
        let pos = f.iter().filter(|i| labels[**i] > 0).count();
        pos > 0 && pos < f.len()
    })
}

/// Stratified k-fold grid search by mean validation accuracy. Ties go to the
/// smaller C, then the smaller γ.
pub fn cross_validate<F: Scalar>(
    data: &LabeledSet<F>,
    grid: &[GridPoint<F>],
    k: usize,
    seed: u64,
    base: &TrainConfig<F>,
) -> Result<CvResult<F>, SvmError> {
    if grid.is_empty() {
        return Err(SvmError::InvalidArgument("empty hyperparameter grid".into()));
    }
    if grid.len() == 1 {
        return Ok(CvResult { best: grid[0], scores: Vec::new(), fold_seed: seed });
    }
    if k < 2 {
        return Err(SvmError::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    data.check_both_classes()?;
    let mut attempt = 0;
    let (folds, fold_seed) = loop {
        let s = seed.wrapping_add(attempt as u64);
        let folds = stratified_folds(data.labels(), k, s);
        if folds_usable(data.labels(), &folds) {
            break (folds, s);
        }
        attempt += 1;
        if attempt == REFOLD_ATTEMPTS {
            return Err(SvmError::Degenerate(format!("no usable stratified split after {REFOLD_ATTEMPTS} attempts")));
        }
    };

    let mut order: Vec<GridPoint<F>> = grid.to_vec();
    order.sort_by(|a, b| a.c.partial_cmp(&b.c).unwrap().then(a.gamma.partial_cmp(&b.gamma).unwrap()));
    let mut gammas: Vec<F> = order.iter().map(|g| g.gamma).collect();
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gammas.dedup();
    let grams: Vec<Gram<F>> = gammas.iter().map(|g| Gram::new(data.inputs().to_vec(), *g)).collect();
    let signs = data.signs();

    let tasks: Vec<(usize, usize)> = (0..order.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let accuracy: Vec<Result<f64, SvmError>> = tasks
        .par_iter()
        .map(|&(g, f)| {
            let point = order[g];
            let gram = &grams[gammas.iter().position(|x| *x == point.gamma).unwrap()];
            let held = &folds[f];
            let train: Vec<usize> = (0..data.len()).filter(|i| held.binary_search(i).is_err()).collect();
            let y: Vec<F> = train.iter().map(|i| signs[*i]).collect();
            let config = TrainConfig { c: point.c, kernel: super::model::KernelParams { gamma: point.gamma }, ..*base };
            config.validate()?;
            let sol = problem(gram, &train, &y, &config).solve()?;
            let correct = held
                .iter()
                .filter(|&&v| {
                    let margin = train
                        .iter()
                        .enumerate()
                        .filter(|(t, _)| sol.alpha[*t] > F::zero())
                        .fold(sol.bias, |acc, (t, &i)| acc + sol.alpha[t] * y[t] * gram.get(i, v));
                    (decide(margin) == Decision::Deny) == (data.labels()[v] > 0)
                })
                .count();
            Ok(correct as f64 / held.len() as f64)
        })
        .collect();

    let mut scores = Vec::with_capacity(order.len());
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (g, point) in order.iter().enumerate() {
        let fold_accuracy = accuracy[g * k..(g + 1) * k].iter().cloned().collect::<Result<Vec<_>, _>>()?;
        let mean_accuracy = fold_accuracy.iter().sum::<f64>() / k as f64;
        if mean_accuracy > best_value {
            best = g;
            best_value = mean_accuracy;
        }
        scores.push(GridScore { c: point.c.as_f64(), gamma: point.gamma.as_f64(), mean_accuracy, fold_accuracy });
    }
    Ok(CvResult { best: order[best], scores, fold_seed })
}
