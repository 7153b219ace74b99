#[path = "support/dual_oracle.rs"]
mod dual_oracle;

use dual_oracle::{dual_oracle, kernel_matrix};
use potlab_core::svm::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(n: usize, dim: usize, seed: u64) -> LabeledSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(0..2) as f64).collect()).collect();
        let y: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.4) { 1 } else { -1 }).collect();
        if y.contains(&1) && y.contains(&-1) {
            return LabeledSet::new(x, y).unwrap();
        }
    }
}

#[test]
fn separable_pair() {
    let data = LabeledSet::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]], vec![1, -1]).unwrap();
    let m = train_smo(&data, &TrainConfig::new(10.0, 0.5)).unwrap();
    let p0 = m.predict(&data.inputs()[0]).unwrap();
    let p1 = m.predict(&data.inputs()[1]).unwrap();
    assert_eq!(p0.decision, Decision::Deny);
    assert_eq!(p1.decision, Decision::Accept);
    assert!(p0.margin > 0.0 && p1.margin < 0.0);
}

#[test]
fn single_class_is_degenerate() {
    let data = LabeledSet::new(vec![vec![1.0], vec![0.0]], vec![1, 1]).unwrap();
    assert!(matches!(train_smo(&data, &TrainConfig::new(1.0, 1.0)), Err(potlab_core::SvmError::Degenerate(_))));
}

#[test]
fn invalid_config_and_dimensions() {
    let data = random_set(6, 3, 1);
    assert!(train_smo(&data, &TrainConfig::new(0.0, 1.0)).is_err());
    assert!(train_smo(&data, &TrainConfig::new(1.0, -1.0)).is_err());
    let m = train_smo(&data, &TrainConfig::new(1.0, 1.0)).unwrap();
    assert!(m.predict(&[0.0; 2]).is_err());
    assert!(LabeledSet::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1, -1]).is_err());
    assert!(LabeledSet::new(vec![vec![0.0]], vec![2]).is_err());
}

#[test]
fn boundary_margin_accepts() {
    assert_eq!(decide(0.0), Decision::Accept);
    assert_eq!(decide(-1e-300), Decision::Accept);
    assert_eq!(decide(1e-300), Decision::Deny);
}

#[test]
fn small_problems_match_projected_gradient_oracle() {
    for seed in 0..12u64 {
        let n = 3 + (seed as usize % 6);
        let data = random_set(n, 4, seed);
        for &(c, gamma) in &[(1.0, 0.5), (10.0, 0.25), (0.3, 1.0)] {
            let mut config = TrainConfig::new(c, gamma);
            config.tol = 1e-6;
            let m = train_smo(&data, &config).unwrap();
            let want = dual_oracle(&data, c, gamma);
            assert!(
                (m.dual_objective - want).abs() <= 1e-4 * want.abs().max(1.0),
                "seed {seed} C {c}: {} vs {want}",
                m.dual_objective
            );
        }
    }
}

#[test]
fn kkt_holds_and_margins_match_expansion() {
    for seed in 0..5 {
        let data = random_set(120, 12, 100 + seed);
        let config = TrainConfig::new(5.0, 0.1);
        let m = train_smo(&data, &config).unwrap();
        assert!(m.kkt_residual(&data).unwrap() <= config.tol, "seed {seed}");
        assert!(m.alpha.iter().all(|a| *a > 0.0 && *a <= config.c));
        for x in data.inputs() {
            let direct: f64 = m.bias
                + m.support_indices
                    .iter()
                    .zip(&m.alpha)
                    .map(|(i, a)| a * data.labels()[*i] as f64 * rbf_kernel(&data.inputs()[*i], x, 0.1).unwrap())
                    .sum::<f64>();
            assert!((m.margin(x).unwrap() - direct).abs() < 1e-12);
        }
        for (k, i) in m.support_indices.iter().enumerate() {
            if m.alpha[k] < config.c {
                let x = &data.inputs()[*i];
                let yf = data.labels()[*i] as f64 * m.margin(x).unwrap();
                assert!((yf - 1.0).abs() <= config.tol);
            }
        }
    }
}

#[test]
fn support_order_does_not_change_labels() {
    let data = random_set(80, 10, 7);
    let m = train_smo(&data, &TrainConfig::new(2.0, 0.2)).unwrap();
    let mut r = m.clone();
    r.support.reverse();
    r.coef.reverse();
    let probe = random_set(60, 10, 8);
    for x in probe.inputs() {
        assert_eq!(m.predict(x).unwrap().decision, r.predict(x).unwrap().decision);
    }
}

#[test]
fn training_is_deterministic() {
    let data = random_set(90, 8, 11);
    let a = train_smo(&data, &TrainConfig::new(3.0, 0.3)).unwrap();
    let b = train_smo(&data, &TrainConfig::new(3.0, 0.3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn json_round_trip_checks_dataset() {
    let data = random_set(40, 6, 12);
    let m = train_smo(&data, &TrainConfig::new(1.0, 0.5)).unwrap();
    let text = m.to_json().unwrap();
    let back = SvmModel::from_json(&text, &data).unwrap();
    assert_eq!(back, m);
    let other = random_set(40, 6, 13);
    assert!(SvmModel::from_json(&text, &other).is_err());
    assert!(SvmModel::<f64>::from_json("{", &data).is_err());
}

#[test]
fn retrain_without_extra_matches_train() {
    let data = random_set(70, 8, 14);
    let config = TrainConfig::new(4.0, 0.2);
    let empty = data.subset(&[]);
    let a = train_smo(&data, &config).unwrap();
    let b = retrain(&data, &empty, &config).unwrap();
    for x in random_set(50, 8, 15).inputs() {
        assert!((a.margin(x).unwrap() - b.margin(x).unwrap()).abs() <= config.tol);
    }
}

#[test]
fn duplicating_a_non_support_point_keeps_predictions() {
    let data = random_set(100, 10, 16);
    let config = TrainConfig::new(2.0, 0.2);
    let m = train_smo(&data, &config).unwrap();
    let i = (0..data.len())
        .find(|i| !m.support_indices.contains(i) && data.labels()[*i] as f64 * m.margin(&data.inputs()[*i]).unwrap() > 1.0)
        .expect("a point outside the margin");
    let extra = data.subset(&[i]);
    let r = retrain(&data, &extra, &config).unwrap();
    for x in random_set(100, 10, 17).inputs() {
        assert_eq!(m.predict(x).unwrap().decision, r.predict(x).unwrap().decision);
    }
}

#[test]
fn warm_start_labels_equal_cold_start() {
    let data = random_set(150, 10, 18);
    let config = TrainConfig::new(5.0, 0.15);
    let trainer = IncrementalTrainer::new(&data, &config).unwrap();
    let extra = random_set(8, 10, 19);
    let mut warm = trainer.clone();
    for (x, y) in extra.inputs().iter().zip(extra.labels()) {
        warm = warm.with_point(x.clone(), *y).unwrap();
    }
    let cold = retrain(&data, &extra, &config).unwrap();
    let warm_model = warm.model();
    assert_eq!(warm_model.dataset_sha256, cold.dataset_sha256);
    assert!(warm_model.kkt_residual(&data.concat(&extra).unwrap()).unwrap() <= config.tol);
    let probe = random_set(200, 10, 20);
    for x in probe.inputs() {
        let (w, c) = (warm_model.margin(x).unwrap(), cold.margin(x).unwrap());
        if c.abs() > 10.0 * config.tol {
            assert_eq!(decide(w), decide(c), "warm {w} cold {c}");
        }
    }
}

#[test]
fn probe_margins_match_model() {
    let data = random_set(60, 6, 21);
    let trainer = IncrementalTrainer::new(&data, &TrainConfig::new(1.0, 0.4)).unwrap();
    let next = trainer.with_point(vec![1.0; 6], -1).unwrap();
    let points = random_set(30, 6, 22).inputs().to_vec();
    let probes = ProbeSet::new(&trainer, points.clone());
    let model = next.model();
    for (m, x) in next.margins(&probes).iter().zip(&points) {
        assert!((m - model.margin(x).unwrap()).abs() < 1e-12);
    }
    let accepted = points.iter().filter(|x| model.accepts(x).unwrap()).count();
    assert_eq!(next.acceptance(&probes), accepted as f64 / points.len() as f64);
}

#[test]
fn with_point_rejects_bad_input() {
    let data = random_set(20, 4, 23);
    let trainer = IncrementalTrainer::new(&data, &TrainConfig::new(1.0, 0.4)).unwrap();
    assert!(trainer.with_point(vec![0.0; 3], 1).is_err());
    assert!(trainer.with_point(vec![0.0; 4], 0).is_err());
}

fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    // cyclic Jacobi rotations
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[test]
fn kernel_subsets_are_positive_semidefinite() {
    for seed in 0..4 {
        let data = random_set(50, 12, 30 + seed);
        let k = kernel_matrix(&data, 0.3);
        for i in 0..50 {
            for j in 0..50 {
                assert_eq!(k[i][j], k[j][i]);
            }
        }
        assert!(symmetric_eigenvalues(k).iter().all(|l| *l >= -1e-8));
    }
}

#[test]
fn stratified_fold_sizes() {
    let labels: Vec<i8> = (0..900).map(|i| if i % 10 < 3 { 1 } else { -1 }).collect();
    let folds = stratified_folds(&labels, 5, 3);
    assert_eq!(folds.len(), 5);
    let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..900).collect::<Vec<_>>());
    for f in &folds {
        assert_eq!(f.len(), 180);
        assert_eq!(f.iter().filter(|i| labels[**i] == 1).count(), 54);
    }
    assert_eq!(folds, stratified_folds(&labels, 5, 3));
}

#[test]
fn single_point_grid_returned_directly() {
    let data = random_set(50, 6, 40);
    let grid = vec![GridPoint { c: 3.0, gamma: 0.2 }];
    let r = cross_validate(&data, &grid, 5, 0, &TrainConfig::new(1.0, 1.0)).unwrap();
    assert_eq!(r.best, grid[0]);
}

#[test]
fn cross_validation_picks_best_mean_accuracy() {
    let data = random_set(120, 8, 41);
    let grid = vec![
        GridPoint { c: 0.1, gamma: 0.5 },
        GridPoint { c: 1.0, gamma: 0.1 },
        GridPoint { c: 10.0, gamma: 0.5 },
    ];
    let r = cross_validate(&data, &grid, 5, 2, &TrainConfig::new(1.0, 1.0)).unwrap();
    let best = r.scores.iter().map(|s| s.mean_accuracy).fold(f64::NEG_INFINITY, f64::max);
    let first = r.scores.iter().find(|s| s.mean_accuracy == best).unwrap();
    assert_eq!((first.c, first.gamma), (r.best.c, r.best.gamma));
}

#[test]
fn default_grid_has_sixteen_points() {
    let g = default_grid::<f64>(41);
    assert_eq!(g.len(), 16);
    assert!(g.iter().any(|p| p.c == 100.0 && (p.gamma - 1.0 / 41.0).abs() < 1e-15));
}

#[test]
fn metrics_consistent_with_counts() {
    let decisions = [Decision::Accept, Decision::Accept, Decision::Deny, Decision::Deny, Decision::Accept];
    let labels = [-1, 1, 1, -1, -1];
    let m = metrics_from_decisions(&decisions, &labels);
    assert_eq!((m.true_positive, m.false_positive, m.true_negative, m.false_negative), (2, 1, 1, 1));
    assert!((m.accuracy - 0.6).abs() < 1e-12);
    assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(m, Metrics::from_counts(2, 1, 1, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_symmetric_and_bounded(a in prop::collection::vec(0.0f64..1.0, 6), b in prop::collection::vec(0.0f64..1.0, 6), g in 0.01f64..2.0) {
        let k = rbf_kernel(&a, &b, g).unwrap();
        prop_assert_eq!(k, rbf_kernel(&b, &a, g).unwrap());
        prop_assert!(k > 0.0 && k <= 1.0);
        prop_assert_eq!(rbf_kernel(&a, &a, g).unwrap(), 1.0);
    }

    #[test]
    fn alphas_in_box(seed in 0u64..1000, c in 0.1f64..20.0) {
        let data = random_set(30, 5, seed);
        let m = train_smo(&data, &TrainConfig::new(c, 0.3)).unwrap();
        prop_assert!(m.alpha.iter().all(|a| *a > 0.0 && *a <= c));
        let balance: f64 = m.coef.iter().sum();
        prop_assert!(balance.abs() < 1e-9 * c.max(1.0) * data.len() as f64);
    }
}
