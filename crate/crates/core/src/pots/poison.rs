//! Greedy probabilistic poisoning: protectors apply for (and repay) loans
//! chosen so that each retraining raises the target group's acceptance rate.

use std::collections::HashMap;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credit::{ApplicantRecord, DatasetSplit, Encoder, FeatureCodes, TargetGroup};
use crate::error::PotError;
use crate::svm::{Decision, IncrementalTrainer, LabeledSet, ProbeSet, SvmModel, TrainConfig};

pub const DEFAULT_BATCH_SIZE: usize = 10;
pub const DEFAULT_RETRY_LIMIT: usize = 10;
pub const DEFAULT_POISON_CHANGES: usize = 3;

/// Label given to every poison record: the protector repays.
const REPAID: i8 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoisonParams {
    pub n_protectors: usize,
    pub batch_size: usize,
    pub max_changes: usize,
    /// Fresh batches drawn after the first one fails, before a step stalls.
    pub retry_limit: usize,
}

impl PoisonParams {
    pub fn new(n_protectors: usize) -> Self {
        Self {
            n_protectors,
            batch_size: DEFAULT_BATCH_SIZE,
            max_changes: DEFAULT_POISON_CHANGES,
            retry_limit: DEFAULT_RETRY_LIMIT,
        }
    }

    /// Upper bound on warm-started retrains for one seed.
    pub fn retrain_bound(&self) -> u64 {
        let neighbourhood = 5 * 5 * 8; // amount bins × duration bins × purposes
        (self.n_protectors * (self.retry_limit + 1) * self.batch_size * neighbourhood) as u64
    }
}

/// Everything shared by the runs of one experiment: the original model and
/// the cached kernel rows of the groups whose acceptance is tracked.
pub struct PoisonContext<'a> {
    pub records: &'a [ApplicantRecord],
    pub encoder: &'a Encoder,
    pub target: &'a TargetGroup,
    /// Training records outside the target group.
    pub pool: Vec<usize>,
    /// All records outside the target group.
    pub others: Vec<usize>,
    original: IncrementalTrainer<f64>,
    original_model: SvmModel<f64>,
    target_probes: ProbeSet<f64>,
    other_probes: ProbeSet<f64>,
}

impl<'a> PoisonContext<'a> {
    pub fn new(
        records: &'a [ApplicantRecord],
        encoder: &'a Encoder,
        split: &DatasetSplit,
        target: &'a TargetGroup,
        config: &TrainConfig<f64>,
    ) -> Result<Self, PotError> {
        if target.is_empty() {
            return Err(PotError::InvalidArgument("empty target group".into()));
        }
        let encode = |ids: &[usize]| -> Result<Vec<Vec<f64>>, PotError> {
            ids.iter().map(|i| encoder.encode::<f64>(&records[*i]).map_err(PotError::from)).collect()
        };
        let labels = split.train_ids.iter().map(|i| crate::credit::svm_label(records[*i].label)).collect();
        let train = LabeledSet::new(encode(&split.train_ids)?, labels)?;
        let original = IncrementalTrainer::new(&train, config)?;
        let original_model = original.model();
        let others: Vec<usize> = (0..records.len()).filter(|i| !target.contains(*i)).collect();
        let pool: Vec<usize> = split.train_ids.iter().copied().filter(|i| !target.contains(*i)).collect();
        let target_probes = ProbeSet::new(&original, encode(&target.ids)?);
        let other_probes = ProbeSet::new(&original, encode(&others)?);
        Ok(Self { records, encoder, target, pool, others, original, original_model, target_probes, other_probes })
    }

    pub fn original_model(&self) -> &SvmModel<f64> {
        &self.original_model
    }

    pub fn original_trainer(&self) -> &IncrementalTrainer<f64> {
        &self.original
    }

    pub fn target_rate(&self, trainer: &IncrementalTrainer<f64>) -> f64 {
        trainer.acceptance(&self.target_probes)
    }

    pub fn other_rate(&self, trainer: &IncrementalTrainer<f64>) -> f64 {
        trainer.acceptance(&self.other_probes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisonRecord {
    /// Protector count after this insertion (1-based).
    pub step: usize,
    /// Training record whose application was transformed.
    pub base_id: usize,
    pub codes: FeatureCodes,
    pub target_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisonPlan {
    pub seed: u64,
    pub records: Vec<PoisonRecord>,
    /// Target-group acceptance after 0..=n protectors.
    pub target_rates: Vec<f64>,
    /// Acceptance of all non-target records after 0..=n protectors.
    pub other_rates: Vec<f64>,
    /// Steps (1-based) at which no qualifying candidate was found.
    pub stalled: Vec<usize>,
    pub batches: usize,
    pub retrains: u64,
}

/// Acceptance rate of `model` on encoded records.
pub fn acceptance_rate(model: &SvmModel<f64>, group: &[Vec<f64>]) -> Result<f64, PotError> {
    if group.is_empty() {
        return Err(PotError::InvalidArgument("empty group".into()));
    }
    let mut accepted = 0usize;
    for x in group {
        if model.predict(x)?.decision == Decision::Accept {
            accepted += 1;
        }
    }
    Ok(accepted as f64 / group.len() as f64)
}

/// Runs `n_protectors` greedy steps. Each step draws `batch_size` pool
/// records, enumerates their transformations and keeps those that (1) the
/// original model accepts and (2) strictly raise the target acceptance when
/// added, labelled repaid, to the training set with all earlier poison. The
/// candidate with the highest resulting rate is inserted; ties go to the
/// earliest candidate. A step that finds nothing after `retry_limit` fresh
/// batches is recorded as stalled, except the first, which fails.
pub fn greedy_poison(ctx: &PoisonContext<'_>, params: &PoisonParams, seed: u64) -> Result<PoisonPlan, PotError> {
    if params.batch_size == 0 {
        return Err(PotError::InvalidArgument("batch_size must be at least 1".into()));
    }
    if params.batch_size > ctx.pool.len() {
        return Err(PotError::InvalidArgument(format!(
            "batch_size {} exceeds the {} available base records",
            params.batch_size,
            ctx.pool.len()
        )));
    }
    let mut rng = potlab_game::seeded_rng(seed);
    let mut current = ctx.original.clone();
    let mut plan = PoisonPlan {
        seed,
        records: Vec::new(),
        target_rates: vec![ctx.target_rate(&current)],
        other_rates: vec![ctx.other_rate(&current)],
        stalled: Vec::new(),
        batches: 0,
        retrains: 0,
    };
    for step in 1..=params.n_protectors {
        let rate = *plan.target_rates.last().unwrap();
        let mut chosen = None;
        // identical transformations within a step retrain to the same model
        let mut seen: HashMap<FeatureCodes, Option<f64>> = HashMap::new();
        for _ in 0..=params.retry_limit {
            plan.batches += 1;
            let batch: Vec<usize> =
                sample(&mut rng, ctx.pool.len(), params.batch_size).into_iter().map(|k| ctx.pool[k]).collect();
            let mut candidates = Vec::new();
            let mut fresh = Vec::new();
            for &base in &batch {
                let codes = ctx.encoder.codes(&ctx.records[base])?;
                for t in ctx.encoder.transformations(&codes, params.max_changes) {
                    match seen.get(&t) {
                        Some(None) => continue,
                        Some(Some(_)) => {}
                        None => {
                            let x = ctx.encoder.vector::<f64>(&t);
                            if ctx.original_model.predict(&x)?.decision != Decision::Accept {
                                seen.insert(t, None);
                                continue;
                            }
                            seen.insert(t, Some(f64::NAN));
                            fresh.push((t, x));
                        }
                    }
                    candidates.push((base, t));
                }
            }
            plan.retrains += fresh.len() as u64;
            let fresh_rates: Vec<f64> = fresh
                .par_iter()
                .map(|(_, x)| current.with_point(x.clone(), REPAID).map(|next| ctx.target_rate(&next)))
                .collect::<Result<_, _>>()?;
            for ((t, _), r) in fresh.iter().zip(fresh_rates) {
                seen.insert(*t, Some(r));
            }
            let rates: Vec<f64> = candidates.iter().map(|(_, t)| seen[t].expect("accepted candidate")).collect();
            let mut best: Option<usize> = None;
            for (k, r) in rates.iter().enumerate() {
                if *r > rate && best.is_none_or(|b| *r > rates[b]) {
                    best = Some(k);
                }
            }
            if let Some(k) = best {
                chosen = Some(candidates.swap_remove(k));
                break;
            }
        }
        match chosen {
            Some((base, codes)) => {
                current = current.with_point(ctx.encoder.vector::<f64>(&codes), REPAID)?;
                let target_rate = ctx.target_rate(&current);
                plan.records.push(PoisonRecord { step, base_id: base, codes, target_rate });
                plan.target_rates.push(target_rate);
                plan.other_rates.push(ctx.other_rate(&current));
            }
            None if step == 1 => return Err(PotError::NoProgress { attempts: params.retry_limit + 1 }),
            None => {
                plan.stalled.push(step);
                plan.target_rates.push(rate);
                plan.other_rates.push(*plan.other_rates.last().unwrap());
            }
        }
    }
    Ok(plan)
}

/// Outcome of one seed: a plan, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub plan: Option<PoisonPlan>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCurve {
    /// Mean over successful seeds of the rate after 0..=n protectors.
    pub mean_target: Vec<f64>,
    pub mean_other: Vec<f64>,
    pub seeds: Vec<u64>,
    pub per_seed_target: Vec<Vec<f64>>,
    pub per_seed_other: Vec<Vec<f64>>,
}

pub fn poison_experiment(ctx: &PoisonContext<'_>, params: &PoisonParams, seeds: &[u64]) -> Vec<SeedRun> {
    seeds
        .iter()
        .map(|&seed| match greedy_poison(ctx, params, seed) {
            Ok(plan) => SeedRun { seed, plan: Some(plan), error: None },
            Err(e) => SeedRun { seed, plan: None, error: Some(e.to_string()) },
        })
        .collect()
}

pub fn acceptance_curve(runs: &[SeedRun]) -> AcceptanceCurve {
    let plans: Vec<&PoisonPlan> = runs.iter().filter_map(|r| r.plan.as_ref()).collect();
    let mean = |pick: fn(&PoisonPlan) -> &Vec<f64>| -> Vec<f64> {
        let len = plans.first().map_or(0, |p| pick(p).len());
        (0..len).map(|k| plans.iter().map(|p| pick(p)[k]).sum::<f64>() / plans.len() as f64).collect()
    };
    AcceptanceCurve {
        mean_target: mean(|p| &p.target_rates),
        mean_other: mean(|p| &p.other_rates),
        seeds: plans.iter().map(|p| p.seed).collect(),
        per_seed_target: plans.iter().map(|p| p.target_rates.clone()).collect(),
        per_seed_other: plans.iter().map(|p| p.other_rates.clone()).collect(),
    }
}
