use std::path::Path;

use potlab_core::credit::*;
use potlab_core::pots::*;
use potlab_core::svm::{retrain, train_smo, LabeledSet, SvmModel, TrainConfig};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/german_credit.csv");

struct Fixture {
    records: Vec<ApplicantRecord>,
    split: DatasetSplit,
    encoder: Encoder,
    train: LabeledSet<f64>,
    config: TrainConfig<f64>,
    model: SvmModel<f64>,
}

fn fixture() -> Fixture {
    let records = load_dataset(Path::new(DATA), &SchemaMapping::default()).unwrap();
    let split = split_dataset(&records, 0).unwrap();
    let encoder = Encoder::fit(&split.train_records(&records)).unwrap();
    let x = split.train_ids.iter().map(|i| encoder.encode::<f64>(&records[*i]).unwrap()).collect();
    let y = split.train_ids.iter().map(|i| svm_label(records[*i].label)).collect();
    let train = LabeledSet::new(x, y).unwrap();
    let config = TrainConfig::new(10.0, 1.0 / encoder.dim() as f64);
    let model = train_smo(&train, &config).unwrap();
    Fixture { records, split, encoder, train, config, model }
}

fn small_params(n: usize) -> PoisonParams {
    PoisonParams { n_protectors: n, batch_size: 4, max_changes: 3, retry_limit: 10 }
}

/// Independent evasion search: enumerate every level combination directly.
fn evasion_oracle(f: &Fixture, codes: &FeatureCodes, budget: usize) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for a in 0..5u8 {
        for d in 0..5u8 {
            for p in 0..f.encoder.purpose.len() as u8 {
                let mut c = *codes;
                c.0[Group::Amount as usize] = a;
                c.0[Group::Duration as usize] = d;
                c.0[Group::Purpose as usize] = p;
                let changes = c.changes_from(codes);
                if changes > budget || !f.model.accepts(&f.encoder.vector::<f64>(&c)).unwrap() {
                    continue;
                }
                let gain = f.encoder.amount_value(a as usize) - f.encoder.amount_value(codes.get(Group::Amount));
                best = match best {
                    Some((g, k)) if g > gain || (g == gain && k <= changes) => Some((g, k)),
                    _ => Some((gain, changes)),
                };
            }
        }
    }
    best
}

fn denied(f: &Fixture) -> Vec<(usize, FeatureCodes)> {
    f.split
        .test_ids
        .iter()
        .map(|i| (*i, f.encoder.codes(&f.records[*i]).unwrap()))
        .filter(|(_, c)| !f.model.accepts(&f.encoder.vector::<f64>(c)).unwrap())
        .collect()
}

#[test]
fn evasion_matches_exhaustive_oracle() {
    let f = fixture();
    let cohort = denied(&f);
    assert!(!cohort.is_empty());
    for (_, codes) in &cohort {
        for budget in 1..=3 {
            let r = evade(&f.model, &f.encoder, codes, budget).unwrap();
            match evasion_oracle(&f, codes, budget) {
                Some((gain, changes)) => {
                    assert!(r.accepted);
                    assert_eq!(r.amount_gain, gain);
                    assert_eq!(r.features_changed, changes);
                    assert!(f.model.accepts(&f.encoder.vector::<f64>(&r.chosen)).unwrap());
                    assert!(r.chosen.same_static(codes));
                }
                None => {
                    assert!(!r.accepted);
                    assert_eq!(r.amount_gain, 0.0);
                    assert_eq!(r.chosen, *codes);
                }
            }
        }
    }
}

#[test]
fn cohort_gains_grow_with_budget_and_summaries_recompute() {
    let f = fixture();
    let ids: Vec<(usize, FeatureCodes)> =
        f.split.test_ids.iter().map(|i| (*i, f.encoder.codes(&f.records[*i]).unwrap())).collect();
    let budgets = [1, 2, 3];
    let rows = evade_cohort(&f.model, &f.encoder, &ids, &budgets).unwrap();
    assert_eq!(rows.len(), ids.len() * 3);
    for chunk in rows.chunks(3) {
        assert!(chunk.windows(2).all(|w| w[0].gain <= w[1].gain && (!w[0].accepted || w[1].accepted)));
        if !chunk[0].denied {
            assert!(chunk.iter().all(|r| r.gain == 0.0 && r.features_changed == 0));
        }
    }
    let summary = summarize(&rows, &budgets);
    for s in &summary {
        let mut gains: Vec<f64> = rows.iter().filter(|r| r.budget == s.budget && r.denied).map(|r| r.gain).collect();
        gains.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(s.denied, gains.len());
        assert_eq!(s.denied, denied(&f).len());
        assert_eq!(s.min, gains[0]);
        assert_eq!(s.max, *gains.last().unwrap());
        assert_eq!(s.median, quantile(&gains, 0.5));
        assert!(s.q1 <= s.median && s.median <= s.q3);
        assert!((s.mean - gains.iter().sum::<f64>() / gains.len() as f64).abs() < 1e-9);
    }
    assert!(summary.windows(2).all(|w| w[0].median <= w[1].median && w[0].flipped <= w[1].flipped));
}

#[test]
fn quantile_interpolates() {
    let v = [1.0, 2.0, 4.0, 8.0];
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 1.0), 8.0);
    assert_eq!(quantile(&v, 0.5), 3.0);
    assert!(quantile(&[], 0.5).is_nan());
}

#[test]
fn poisoning_is_deterministic_and_conditions_hold() {
    let f = fixture();
    let target = select_target_group(&f.records, &f.encoder, &f.model).unwrap();
    let ctx = PoisonContext::new(&f.records, &f.encoder, &f.split, &target, &f.config).unwrap();
    let params = small_params(2);
    let a = greedy_poison(&ctx, &params, 4).unwrap();
    let b = greedy_poison(&ctx, &params, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.target_rates.len(), 3);
    assert_eq!(a.target_rates[0], 0.0);
    assert!(a.target_rates.windows(2).all(|w| w[0] <= w[1]));
    assert!(a.retrains <= params.retrain_bound());

    let mut poison = LabeledSet::new(Vec::new(), Vec::new()).unwrap();
    let mut previous = a.target_rates[0];
    for rec in &a.records {
        let x = f.encoder.vector::<f64>(&rec.codes);
        // condition 1: the original model accepts the poison application
        assert!(f.model.accepts(&x).unwrap());
        assert!(ctx.pool.contains(&rec.base_id));
        let base = f.encoder.codes(&f.records[rec.base_id]).unwrap();
        assert!(rec.codes.changes_from(&base) >= 1 && rec.codes.changes_from(&base) <= params.max_changes);
        assert!(rec.codes.same_static(&base));
        // condition 2: the rate strictly rises, checked with a cold retrain
        poison.push(x, -1).unwrap();
        let cold = retrain(&f.train, &poison, &f.config).unwrap();
        let members: Vec<Vec<f64>> = target.ids.iter().map(|i| f.encoder.encode::<f64>(&f.records[*i]).unwrap()).collect();
        let rate = acceptance_rate(&cold, &members).unwrap();
        assert!((rate - rec.target_rate).abs() <= 1.0 / members.len() as f64 + 1e-12, "{rate} vs {}", rec.target_rate);
        assert!(rec.target_rate > previous);
        previous = rec.target_rate;
    }
}

#[test]
fn zero_protectors_reports_the_baseline() {
    let f = fixture();
    let target = select_target_group(&f.records, &f.encoder, &f.model).unwrap();
    let ctx = PoisonContext::new(&f.records, &f.encoder, &f.split, &target, &f.config).unwrap();
    let plan = greedy_poison(&ctx, &small_params(0), 1).unwrap();
    assert_eq!(plan.target_rates, vec![0.0]);
    assert!(plan.records.is_empty() && plan.retrains == 0);
    let others: Vec<Vec<f64>> = ctx.others.iter().map(|i| f.encoder.encode::<f64>(&f.records[*i]).unwrap()).collect();
    assert_eq!(plan.other_rates, vec![acceptance_rate(&f.model, &others).unwrap()]);
}

#[test]
fn invalid_poison_inputs_are_rejected() {
    let f = fixture();
    let target = select_target_group(&f.records, &f.encoder, &f.model).unwrap();
    let ctx = PoisonContext::new(&f.records, &f.encoder, &f.split, &target, &f.config).unwrap();
    assert!(greedy_poison(&ctx, &PoisonParams { batch_size: 0, ..small_params(1) }, 0).is_err());
    assert!(greedy_poison(&ctx, &PoisonParams { batch_size: 10_000, ..small_params(1) }, 0).is_err());
    let empty = TargetGroup { ids: vec![] };
    assert!(PoisonContext::new(&f.records, &f.encoder, &f.split, &empty, &f.config).is_err());
}

#[test]
fn mean_curve_recomputes_from_seeds() {
    let f = fixture();
    let target = select_target_group(&f.records, &f.encoder, &f.model).unwrap();
    let ctx = PoisonContext::new(&f.records, &f.encoder, &f.split, &target, &f.config).unwrap();
    let runs = poison_experiment(&ctx, &small_params(1), &[1, 3, 4]);
    let curve = acceptance_curve(&runs);
    let plans: Vec<&PoisonPlan> = runs.iter().filter_map(|r| r.plan.as_ref()).collect();
    assert_eq!(curve.seeds.len(), plans.len());
    for k in 0..curve.mean_target.len() {
        let mean = plans.iter().map(|p| p.target_rates[k]).sum::<f64>() / plans.len() as f64;
        assert!((curve.mean_target[k] - mean).abs() < 1e-12);
        let other = plans.iter().map(|p| p.other_rates[k]).sum::<f64>() / plans.len() as f64;
        assert!((curve.mean_other[k] - other).abs() < 1e-12);
    }
}
