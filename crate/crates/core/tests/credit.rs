use std::collections::BTreeSet;
use std::path::Path;

use potlab_core::credit::*;
use potlab_core::svm::{train_smo, LabeledSet, TrainConfig};
use potlab_core::DataError;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/german_credit.csv");
const HEADER: &str = "age,sex,job,housing,saving_account,checking_account,credit_amount,duration,purpose,label\n";

fn records() -> Vec<ApplicantRecord> {
    load_dataset(Path::new(DATA), &SchemaMapping::default()).unwrap()
}

fn read(body: &str) -> Result<Vec<ApplicantRecord>, DataError> {
    read_records(format!("{HEADER}{body}").as_bytes(), &SchemaMapping::default())
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
    f
}

/// Linear-interpolation quantile computed directly from the definition.
fn quantile_oracle(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (v.len() - 1) as f64;
    let below = pos.floor() as usize;
    let frac = pos - below as f64;
    if below + 1 < v.len() {
        v[below] * (1.0 - frac) + v[below + 1] * frac
    } else {
        v[below]
    }
}

/// Brute-force neighbourhood: every combination of mutable levels, filtered by
/// the number of groups that differ.
fn neighbourhood_oracle(encoder: &Encoder, codes: &FeatureCodes, max_changes: usize) -> BTreeSet<FeatureCodes> {
    let sizes = encoder.group_sizes();
    let mut out = BTreeSet::new();
    for a in 0..sizes[Group::Amount as usize] {
        for d in 0..sizes[Group::Duration as usize] {
            for p in 0..sizes[Group::Purpose as usize] {
                let mut c = *codes;
                c.0[Group::Amount as usize] = a as u8;
                c.0[Group::Duration as usize] = d as u8;
                c.0[Group::Purpose as usize] = p as u8;
                let diff = [Group::Amount, Group::Duration, Group::Purpose]
                    .iter()
                    .filter(|g| c.0[**g as usize] != codes.0[**g as usize])
                    .count();
                if (1..=max_changes).contains(&diff) {
                    out.insert(c);
                }
            }
        }
    }
    out
}

#[test]
fn canonical_file_has_expected_shape() {
    let r = records();
    assert_eq!(r.len(), 1000);
    assert_eq!(r.iter().filter(|x| x.label == Outcome::Default).count(), 300);
    assert!(r.iter().all(|x| x.age > 0 && x.credit_amount > 0 && x.duration > 0));
}

#[test]
fn loader_reports_row_and_column() {
    let good = "30,male,2,own,little,little,1000,12,car,repaid\n";
    assert_eq!(read(good).unwrap().len(), 1);
    match read(&format!("{good}30,male,2,own,little,little,1000,12,yacht,repaid\n")) {
        Err(DataError::Schema { row, column, .. }) => {
            assert_eq!(row, 3);
            assert_eq!(column, "purpose");
        }
        other => panic!("{other:?}"),
    }
    match read("30,male,2,own,little,little,-5,12,car,repaid\n") {
        Err(DataError::Schema { row: 2, column, .. }) => assert_eq!(column, "credit_amount"),
        other => panic!("{other:?}"),
    }
    match read("30,male,7,own,little,little,5,12,car,repaid\n") {
        Err(DataError::Schema { row: 2, column, .. }) => assert_eq!(column, "job"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(read(""), Err(DataError::Empty)));
    let missing = read_records("age,sex\n30,male\n".as_bytes(), &SchemaMapping::default());
    assert!(matches!(missing, Err(DataError::MissingColumn { .. })));
}

#[test]
fn missing_file_names_the_path() {
    let err = load_records(Path::new("/nonexistent/credit.csv"), &SchemaMapping::default()).unwrap_err();
    assert!(matches!(err, DataError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/credit.csv"));
}

#[test]
fn non_canonical_files_are_rejected_by_the_full_loader() {
    let f = write_temp(&format!("{HEADER}30,male,2,own,little,little,1000,12,car,repaid\n"));
    assert_eq!(load_records(f.path(), &SchemaMapping::default()).unwrap().len(), 1);
    assert!(matches!(load_dataset(f.path(), &SchemaMapping::default()), Err(DataError::InvalidInput(_))));
}

#[test]
fn schema_mapping_renames_columns() {
    let text = "Age,sex,job,housing,saving_account,checking_account,Credit amount,duration,purpose,Risk\n\
                30,male,2,own,NA,little,1000,12,car,repaid\n";
    let mapping = SchemaMapping::parse("# renamed\nage = Age\ncredit_amount = Credit amount\n\nlabel = Risk\n").unwrap();
    let f = write_temp(text);
    let r = load_records(f.path(), &mapping).unwrap();
    assert_eq!(r[0].credit_amount, 1000);
    assert_eq!(r[0].saving_account, Savings::Unknown);
    assert!(matches!(SchemaMapping::parse("nope = x"), Err(DataError::Mapping { line: 1, .. })));
    assert!(matches!(SchemaMapping::parse("age = a\nage = b"), Err(DataError::Mapping { line: 2, .. })));
    let mf = write_temp("label = Risk\n");
    assert_eq!(SchemaMapping::load(mf.path()).unwrap().source_column("label"), "Risk");
}

#[test]
fn quantile_edges_match_oracle() {
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    let b = QuantileBinner::fit("x", &values, 5).unwrap();
    for (q, e) in b.edges.iter().enumerate() {
        assert!((e - quantile_oracle(&values, (q + 1) as f64 / 5.0)).abs() < 1e-12);
    }
    let mut counts = [0usize; 5];
    for v in &values {
        counts[b.bin(*v)] += 1;
    }
    assert_eq!(counts, [20; 5]);
    assert!(QuantileBinner::fit("x", &[], 5).is_err());
    assert!(QuantileBinner::fit("x", &[1.0], 0).is_err());
}

#[test]
fn canonical_edges_match_oracle() {
    let r = records();
    let split = split_dataset(&r, 0).unwrap();
    let train = split.train_records(&r);
    let enc = Encoder::fit(&train).unwrap();
    let amounts: Vec<f64> = train.iter().map(|x| f64::from(x.credit_amount)).collect();
    for (q, e) in enc.credit_amount.edges.iter().enumerate() {
        assert!((e - quantile_oracle(&amounts, (q + 1) as f64 / 5.0)).abs() < 1e-9);
    }
    for bin in 0..5 {
        let inside: Vec<f64> = amounts.iter().copied().filter(|a| enc.credit_amount.bin(*a) == bin).collect();
        let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(enc.amount_value(bin), (lo + hi) / 2.0);
    }
}

proptest! {
    #[test]
    fn bins_are_monotone(mut values in prop::collection::vec(0.0f64..1e4, 1..200), k in 1usize..8) {
        let b = QuantileBinner::fit("x", &values, k).unwrap();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let bins: Vec<usize> = values.iter().map(|v| b.bin(*v)).collect();
        prop_assert!(bins.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(bins.iter().all(|x| *x < k));
    }
}

#[test]
fn encoding_is_one_hot_and_round_trips() {
    let r = records();
    let split = split_dataset(&r, 1).unwrap();
    let enc = Encoder::fit(&split.train_records(&r)).unwrap();
    assert!((36..=42).contains(&enc.dim()), "dim {}", enc.dim());
    for rec in split.train(&r) {
        let x = enc.encode::<f64>(rec).unwrap();
        assert_eq!(x.len(), enc.dim());
        assert_eq!(x.iter().filter(|v| **v == 1.0).count(), GROUPS);
        assert!(x.iter().all(|v| *v == 0.0 || *v == 1.0));
        let d = enc.decode(&x).unwrap();
        assert_eq!(d.sex, rec.sex);
        assert_eq!(d.job, rec.job);
        assert_eq!(d.housing, rec.housing);
        assert_eq!(d.saving_account, rec.saving_account);
        assert_eq!(d.checking_account, rec.checking_account);
        assert_eq!(d.purpose, rec.purpose);
        assert_eq!(d.age_bin, enc.age.bin(f64::from(rec.age)));
        assert_eq!(d.amount_bin, enc.credit_amount.bin(f64::from(rec.credit_amount)));
        assert_eq!(d.duration_bin, enc.duration.bin(f64::from(rec.duration)));
        let x32 = enc.encode::<f32>(rec).unwrap();
        assert_eq!(enc.codes_of(&x32).unwrap(), enc.codes(rec).unwrap());
    }
    let mut broken = enc.encode::<f64>(&r[split.train_ids[0]]).unwrap();
    broken[0] = 1.0 - broken[0];
    assert!(enc.codes_of(&broken).is_err());
    assert!(enc.codes_of(&broken[1..]).is_err());
}

#[test]
fn encoder_ignores_test_rows_and_order() {
    let r = records();
    let split = split_dataset(&r, 2).unwrap();
    let train = split.train_records(&r);
    let enc = Encoder::fit(&train).unwrap();
    let mut shuffled = train.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(7));
    assert_eq!(Encoder::fit(&shuffled).unwrap(), enc);
    // altering every test row leaves the fit unchanged
    let mut altered = r.clone();
    for id in &split.test_ids {
        altered[*id].credit_amount = 1;
        altered[*id].age = 99;
    }
    assert_eq!(Encoder::fit(&split.train_records(&altered)).unwrap(), enc);
}

#[test]
fn unseen_category_is_an_error() {
    let r = records();
    let train: Vec<ApplicantRecord> = r.iter().filter(|x| x.purpose != Purpose::Education).cloned().collect();
    let enc = Encoder::fit(&train).unwrap();
    let edu = r.iter().find(|x| x.purpose == Purpose::Education).unwrap();
    assert!(matches!(enc.codes(edu), Err(DataError::UnseenCategory { field: "purpose", .. })));
    assert!(matches!(Encoder::fit(&[]), Err(DataError::Empty)));
}

#[test]
fn splits_partition_and_reproduce() {
    let r = records();
    let mut firsts = BTreeSet::new();
    for seed in 0..5 {
        let s = split_dataset(&r, seed).unwrap();
        assert_eq!(s.train_ids.len(), TRAIN_SIZE);
        assert_eq!(s.test_ids.len(), TEST_SIZE);
        let all: BTreeSet<usize> = s.train_ids.iter().chain(&s.test_ids).copied().collect();
        assert_eq!(all.len(), 1000);
        assert_eq!(split_dataset(&r, seed).unwrap(), s);
        firsts.insert(s.test_ids.clone());
    }
    assert_eq!(firsts.len(), 5);
    assert!(split_dataset(&r[..999], 0).is_err());
}

#[test]
fn target_group_members_satisfy_the_predicate() {
    let r = records();
    let split = split_dataset(&r, 0).unwrap();
    let train = split.train_records(&r);
    let enc = Encoder::fit(&train).unwrap();
    let x = train.iter().map(|t| enc.encode::<f64>(t).unwrap()).collect();
    let y = train.iter().map(|t| svm_label(t.label)).collect();
    let data = LabeledSet::new(x, y).unwrap();
    let gamma = 1.0 / enc.dim() as f64;
    let mut model = train_smo(&data, &TrainConfig::new(10.0, gamma)).unwrap();
    let group = select_target_group(&r, &enc, &model).unwrap();
    assert!(!group.is_empty());
    assert!(group.ids.windows(2).all(|w| w[0] < w[1]));
    for (id, rec) in r.iter().enumerate() {
        let denied = !model.accepts(&enc.encode::<f64>(rec).unwrap()).unwrap();
        let expected = rec.has_little_funds() && rec.label == Outcome::Repaid && denied;
        assert_eq!(group.contains(id), expected, "record {id}");
    }
    // a model that accepts everyone leaves nobody to protect
    model.bias = -1e9;
    assert!(select_target_group(&r, &enc, &model).unwrap().is_empty());
}

#[test]
fn transformations_match_brute_force() {
    let r = records();
    let split = split_dataset(&r, 0).unwrap();
    let enc = Encoder::fit(&split.train_records(&r)).unwrap();
    let codes = enc.codes(&r[split.train_ids[0]]).unwrap();
    let sizes = enc.group_sizes();
    let (a, d, p) = (sizes[Group::Amount as usize], sizes[Group::Duration as usize], sizes[Group::Purpose as usize]);
    assert_eq!((a, d, p), (5, 5, 8));
    let expected = [(a - 1) + (d - 1) + (p - 1), 87, a * d * p - 1];
    let mut previous = BTreeSet::new();
    for (k, want) in (1..=3).zip(expected) {
        let got = enc.transformations(&codes, k);
        let set: BTreeSet<FeatureCodes> = got.iter().copied().collect();
        assert_eq!(set.len(), got.len());
        assert_eq!(got.len(), want, "k = {k}");
        assert_eq!(set, neighbourhood_oracle(&enc, &codes, k));
        assert!(got.iter().all(|t| t.same_static(&codes) && *t != codes));
        assert!(previous.is_subset(&set));
        previous = set;
    }
    assert_eq!(enc.transformations(&codes, 0).len(), 0);
}
