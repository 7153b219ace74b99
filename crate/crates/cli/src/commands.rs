//! One function per subcommand. Each reads its inputs from the config and
//! the output directory, and writes its results there.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use potlab_core::credit::{load_dataset, select_target_group, ApplicantRecord, DatasetSplit, Encoder, SchemaMapping};
use potlab_core::pots::{
    acceptance_curve, evade_cohort, poison_experiment, summarize, PoisonContext, PoisonParams,
};
use potlab_core::svm::{LabeledSet, SvmModel};
use potlab_game::{
    best_protector_policy, best_reaction_policy, discounted_value, AgentId, EvalMode, GameError, Move, Objective,
    TabularGame, ValueParams, WorldState,
};
use potlab_wild::{
    build_adnauseam_env, build_pokemon_env, build_uber_env, run_wild_experiment, BenefitSummary, WildEnv, ENV_NAMES,
};

use crate::config::{DataSection, LoadedConfig};
use crate::error::{io_error, CliError};
use crate::output::{sha256_file, write_csv, write_json, ManifestWriter};
use crate::pipeline::{fit_classifier, prepare};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const ENCODER_FILE: &str = "encoder.json";
pub const SPLIT_FILE: &str = "split.json";
pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.json";

pub struct Context<'a> {
    pub config: &'a LoadedConfig,
    pub out: &'a Path,
    pub seed_override: Option<u64>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_records(data: &DataSection) -> Result<Vec<ApplicantRecord>, CliError> {
    let mapping = match &data.schema {
        Some(p) => SchemaMapping::load(p)?,
        None => SchemaMapping::default(),
    };
    Ok(load_dataset(&data.path, &mapping)?)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Encoded set file: `record_id,label,x0,...`.
fn encoded_rows(ids: &[usize], set: &LabeledSet<f64>) -> Vec<Vec<String>> {
    ids.iter()
        .zip(set.inputs().iter().zip(set.labels()))
        .map(|(id, (x, y))| {
            let mut row = vec![id.to_string(), y.to_string()];
            row.extend(x.iter().map(|v| fmt(*v)));
            row
        })
        .collect()
}

fn read_encoded(path: &Path) -> Result<(Vec<usize>, LabeledSet<f64>), CliError> {
    let bad = |m: String| CliError::Data(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let (mut ids, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| row.get(k).unwrap_or("").to_string();
        ids.push(num(0).parse::<usize>().map_err(|e| bad(format!("row {}: {e}", line + 2)))?);
        ys.push(num(1).parse::<i8>().map_err(|e| bad(format!("row {}: {e}", line + 2)))?);
        let x = (2..row.len())
            .map(|k| num(k).parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", line + 2)))?;
        xs.push(x);
    }
    Ok((ids, LabeledSet::new(xs, ys)?))
}

fn encoded_header(dim: usize) -> Vec<String> {
    let mut h = vec!["record_id".to_string(), "label".to_string()];
    h.extend((0..dim).map(|k| format!("x{k}")));
    h
}

fn split_seed(ctx: &Context<'_>) -> Result<u64, CliError> {
    Ok(ctx.seed_override.unwrap_or(ctx.config.data()?.split_seed))
}

pub fn prep(ctx: &Context<'_>, m: &mut ManifestWriter) -> Result<(), CliError> {
    let data = ctx.config.data()?;
    m.manifest.dataset_sha256 = Some(sha256_file(&data.path)?);
    let seed = split_seed(ctx)?;
    m.manifest.seeds = vec![seed];
    let records = load_records(data)?;
    m.stage("load");
    let prep = prepare(&records, seed)?;
    m.manifest.hyperparameters = json!({ "bins": prep.encoder.age.k, "dim": prep.encoder.dim() });
    m.stage("encode");
    let header = encoded_header(prep.encoder.dim());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let outputs = [
        write_csv(ctx.out, TRAIN_FILE, &header, &encoded_rows(&prep.split.train_ids, &prep.train))?,
        write_csv(ctx.out, TEST_FILE, &header, &encoded_rows(&prep.split.test_ids, &prep.test))?,
        write_json(ctx.out, ENCODER_FILE, &prep.encoder)?,
        write_json(ctx.out, SPLIT_FILE, &prep.split)?,
    ];
    outputs.iter().for_each(|p| m.output(p));
    m.stage("write");
    Ok(())
}

struct Prepped {
    split: DatasetSplit,
    encoder: Encoder,
    train: LabeledSet<f64>,
    test_ids: Vec<usize>,
    test: LabeledSet<f64>,
}

fn load_prepped(out: &Path) -> Result<Prepped, CliError> {
    let split: DatasetSplit = read_json(&out.join(SPLIT_FILE))?;
    let encoder: Encoder = read_json(&out.join(ENCODER_FILE))?;
    let (train_ids, train) = read_encoded(&out.join(TRAIN_FILE))?;
    let (test_ids, test) = read_encoded(&out.join(TEST_FILE))?;
    if train_ids != split.train_ids || test_ids != split.test_ids {
        return Err(CliError::Data(format!("{} does not match the encoded files; rerun prep", SPLIT_FILE)));
    }
    Ok(Prepped { split, encoder, train, test_ids, test })
}

fn load_model(out: &Path, train: &LabeledSet<f64>) -> Result<SvmModel<f64>, CliError> {
    Ok(SvmModel::from_json(&read_text(&out.join(MODEL_FILE))?, train)?)
}

#[derive(Serialize)]
struct MetricsReport {
    positive_class: &'static str,
    c: f64,
    gamma: f64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    true_positive: usize,
    false_positive: usize,
    true_negative: usize,
    false_negative: usize,
    support_vectors: usize,
    iterations: usize,
    kkt_residual: f64,
    fold_seed: u64,
    cv: Vec<potlab_core::svm::GridScore>,
}

pub fn train(ctx: &Context<'_>, m: &mut ManifestWriter) -> Result<(), CliError> {
    let p = load_prepped(ctx.out)?;
    let seed = ctx.seed_override.unwrap_or(p.split.seed);
    m.manifest.seeds = vec![seed];
    m.manifest.dataset_sha256 = Some(p.train.sha256());
    m.stage("load");
    let prep = crate::pipeline::Prepared { split: p.split, encoder: p.encoder, train: p.train, test: p.test };
    let fitted = fit_classifier(&prep, ctx.config.config.train.as_ref(), seed)?;
    m.stage("cross-validate and train");
    let model = &fitted.model;
    let met = fitted.metrics;
    let report = MetricsReport {
        positive_class: "repaid",
        c: model.config.c,
        gamma: model.config.kernel.gamma,
        accuracy: met.accuracy,
        precision: met.precision,
        recall: met.recall,
        true_positive: met.true_positive,
        false_positive: met.false_positive,
        true_negative: met.true_negative,
        false_negative: met.false_negative,
        support_vectors: model.support_count(),
        iterations: model.iterations,
        kkt_residual: model.kkt_residual(&prep.train)?,
        fold_seed: fitted.cv.fold_seed,
        cv: fitted.cv.scores.clone(),
    };
    m.manifest.hyperparameters = json!({ "c": model.config.c, "gamma": model.config.kernel.gamma, "tol": model.config.tol });
    let mut text = model.to_json()?;
    text.push('\n');
    m.output(&crate::output::write_atomic(ctx.out, MODEL_FILE, text.as_bytes())?);
    m.output(&write_json(ctx.out, METRICS_FILE, &report)?);
    m.stage("write");
    println!(
        "C = {}, gamma = {}: accuracy {:.3}, precision {:.3}, recall {:.3}",
        model.config.c, model.config.kernel.gamma, met.accuracy, met.precision, met.recall
    );
    Ok(())
}

pub fn evade(ctx: &Context<'_>, m: &mut ManifestWriter) -> Result<(), CliError> {
    let budgets = ctx.config.evade()?.budgets.clone();
    if budgets.is_empty() || budgets.contains(&0) {
        return Err(CliError::Config("[evade] budgets must be a non-empty list of positive counts".into()));
    }
    let p = load_prepped(ctx.out)?;
    let model = load_model(ctx.out, &p.train)?;
    m.manifest.dataset_sha256 = Some(p.train.sha256());
    m.manifest.hyperparameters = json!({ "budgets": budgets });
    m.stage("load");
    let cohort = p
        .test_ids
        .iter()
        .zip(p.test.inputs())
        .map(|(id, x)| Ok((*id, p.encoder.codes_of(x)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = evade_cohort(&model, &p.encoder, &cohort, &budgets)?;
    let summary = summarize(&rows, &budgets);
    m.stage("search");
    let gains: Vec<Vec<String>> = rows
        .iter()
        .filter(|r| r.denied)
        .map(|r| vec![r.record_id.to_string(), r.budget.to_string(), fmt(r.gain), r.features_changed.to_string()])
        .collect();
    m.output(&write_csv(ctx.out, "evasion_gains.csv", &["record_id", "budget", "gain", "features_changed"], &gains)?);
    let sum_rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            let mut row = vec![s.budget.to_string(), s.denied.to_string(), s.flipped.to_string()];
            row.extend([s.min, s.q1, s.median, s.q3, s.max, s.mean].iter().map(|v| fmt(*v)));
            row
        })
        .collect();
    let header = ["budget", "denied", "flipped", "min", "q1", "median", "q3", "max", "mean"];
    m.output(&write_csv(ctx.out, "evasion_summary.csv", &header, &sum_rows)?);
    m.stage("write");
    for s in &summary {
        println!("budget {}: {}/{} denied records flipped, median gain {}", s.budget, s.flipped, s.denied, s.median);
    }
    Ok(())
}

pub fn poison(ctx: &Context<'_>, m: &mut ManifestWriter) -> Result<(), CliError> {
    let section = ctx.config.poison()?;
    let data = ctx.config.data()?;
    let mut seeds = section.seeds.clone();
    if seeds.is_empty() {
        return Err(CliError::Config("[poison] seeds must not be empty".into()));
    }
    if let Some(first) = ctx.seed_override {
        seeds = (first..first + seeds.len() as u64).collect();
    }
    let params = PoisonParams {
        n_protectors: section.protectors,
        batch_size: section.batch_size,
        max_changes: section.max_changes,
        retry_limit: section.retry_limit,
    };
    m.manifest.seeds = seeds.clone();
    m.manifest.hyperparameters = serde_json::to_value(params).map_err(|e| CliError::Data(e.to_string()))?;
    m.manifest.retrain_bound = Some(params.retrain_bound());
    m.manifest.dataset_sha256 = Some(sha256_file(&data.path)?);
    let records = load_records(data)?;
    let p = load_prepped(ctx.out)?;
    let model = load_model(ctx.out, &p.train)?;
    m.stage("load");
    let target = select_target_group(&records, &p.encoder, &model)?;
    if target.is_empty() {
        return Err(CliError::Data("the model denies no target-group applicant; nothing to poison".into()));
    }
    m.output(&write_json(ctx.out, "target_group.json", &target)?);
    let pctx = PoisonContext::new(&records, &p.encoder, &p.split, &target, &model.config)?;
    let runs = poison_experiment(&pctx, &params, &seeds);
    m.stage("poison");
    let mut rows = Vec::new();
    let mut retrains = 0;
    for run in &runs {
        match (&run.plan, &run.error) {
            (Some(plan), _) => {
                retrains += plan.retrains;
                for (k, (t, o)) in plan.target_rates.iter().zip(&plan.other_rates).enumerate() {
                    rows.push(vec![run.seed.to_string(), k.to_string(), fmt(*t), fmt(*o)]);
                }
                m.output(&write_json(ctx.out, &format!("poison_plan_{}.json", run.seed), plan)?);
                if !plan.stalled.is_empty() {
                    m.manifest.warnings.push(format!("seed {} stalled at steps {:?}", run.seed, plan.stalled));
                }
            }
            (None, err) => {
                let msg = format!("seed {}: {}", run.seed, err.as_deref().unwrap_or("failed"));
                eprintln!("warning: {msg}");
                m.manifest.warnings.push(msg);
            }
        }
    }
    m.manifest.retrains = Some(retrains);
    let header = ["seed", "protectors", "target_rate", "other_rate"];
    m.output(&write_csv(ctx.out, "poison_curve.csv", &header, &rows)?);
    let curve = acceptance_curve(&runs);
    if curve.seeds.is_empty() {
        return Err(CliError::Numerical("no poisoning seed produced a plan".into()));
    }
    let mean_rows: Vec<Vec<String>> = curve
        .mean_target
        .iter()
        .zip(&curve.mean_other)
        .enumerate()
        .map(|(k, (t, o))| vec![k.to_string(), fmt(*t), fmt(*o), curve.seeds.len().to_string()])
        .collect();
    m.output(&write_csv(ctx.out, "poison_mean.csv", &["protectors", "target_rate", "other_rate", "seeds"], &mean_rows)?);
    m.stage("write");
    let last = curve.mean_target.len() - 1;
    println!(
        "target group of {}: mean acceptance {} -> {} after {} protectors over {} seeds",
        target.len(),
        curve.mean_target[0],
        curve.mean_target[last],
        last,
        curve.seeds.len()
    );
    Ok(())
}

fn wild_rows<S: WorldState, A: Move, R: Move>(
    env: &WildEnv<S, A, R>,
    horizon: usize,
    seeds: &[u64],
) -> Result<Vec<BenefitSummary>, CliError> {
    Ok(vec![run_wild_experiment(env, true, horizon, seeds)?, run_wild_experiment(env, false, horizon, seeds)?])
}

pub fn wild(ctx: &Context<'_>, m: &mut ManifestWriter) -> Result<(), CliError> {
    let w = ctx.config.wild()?;
    if w.dynamics != "illustrative" {
        return Err(CliError::Config(format!("[wild] dynamics must be \"illustrative\", got \"{}\"", w.dynamics)));
    }
    let mut range = w.seeds;
    if let Some(first) = ctx.seed_override {
        range.first = first;
    }
    let seeds = range.seeds();
    m.manifest.seeds = seeds.clone();
    let summaries = match w.env.as_str() {
        "uber" => {
            let cfg = w.uber.unwrap_or_default();
            m.manifest.hyperparameters = serde_json::to_value(cfg).unwrap_or_default();
            wild_rows(&build_uber_env(&cfg)?, w.horizon, &seeds)?
        }
        "pokemon" => {
            let cfg = w.pokemon.clone().unwrap_or_default();
            m.manifest.hyperparameters = serde_json::to_value(&cfg).unwrap_or_default();
            wild_rows(&build_pokemon_env(&cfg)?, w.horizon, &seeds)?
        }
        "adnauseam" => {
            let cfg = w.adnauseam.clone().unwrap_or_default();
            m.manifest.hyperparameters = serde_json::to_value(&cfg).unwrap_or_default();
            wild_rows(&build_adnauseam_env(&cfg)?, w.horizon, &seeds)?
        }
        other => {
            return Err(CliError::Usage(format!("unknown environment `{other}`; expected one of {}", ENV_NAMES.join(", "))))
        }
    };
    m.stage("simulate");
    let policy = |s: &BenefitSummary| if s.with_pot { "pot" } else { "baseline" };
    let runs: Vec<Vec<String>> = summaries
        .iter()
        .flat_map(|s| {
            s.runs.iter().map(move |r| {
                vec![s.env.clone(), policy(s).to_string(), r.seed.to_string(), fmt(r.total_population), fmt(r.mean_population)]
            })
        })
        .collect();
    let name = format!("wild_{}_runs.csv", w.env);
    m.output(&write_csv(ctx.out, &name, &["env", "policy", "seed", "total_population", "mean_population"], &runs)?);
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| vec![s.env.clone(), policy(s).to_string(), s.horizon.to_string(), s.runs.len().to_string(), fmt(s.mean_population)])
        .collect();
    let name = format!("wild_{}_summary.csv", w.env);
    m.output(&write_csv(ctx.out, &name, &["env", "policy", "horizon", "runs", "mean_population"], &rows)?);
    m.stage("write");
    println!(
        "{} (illustrative dynamics): mean population benefit {} with the protective policy, {} without",
        w.env, summaries[0].mean_population, summaries[1].mean_population
    );
    Ok(())
}

#[derive(Serialize)]
struct Choice {
    index: usize,
    value: f64,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct ValueReport {
    game: String,
    gamma: f64,
    horizon: usize,
    exact: f64,
    monte_carlo: f64,
    std_error: f64,
    samples: usize,
    mc_seed: u64,
    within_three_std_errors: bool,
    best_reaction: Option<Choice>,
    protector: Option<usize>,
    best_protector: Option<Choice>,
}

pub fn value(ctx: &Context<'_>, m: &mut ManifestWriter) -> Result<(), CliError> {
    let v = ctx.config.value()?;
    let table = match v.game.as_str() {
        "demo" => TabularGame::demo(),
        "table" => v.table.clone().ok_or_else(|| CliError::Config("game = \"table\" needs a [value.table] section".into()))?,
        env if ENV_NAMES.contains(&env) => {
            return Err(GameError::UnsupportedSpace(format!(
                "`{env}` has no finite state table; value needs game = \"demo\" or \"table\""
            ))
            .into())
        }
        other => return Err(CliError::Usage(format!("unknown game `{other}`; expected demo or table"))),
    };
    let seed = ctx.seed_override.unwrap_or(v.seed);
    m.manifest.seeds = vec![seed];
    m.manifest.hyperparameters = json!({ "gamma": v.gamma, "horizon": v.horizon, "samples": v.samples });
    let game = table.build::<f64>()?;
    let params = ValueParams::new(v.gamma, v.horizon, 0)?;
    let h = game.initial_history();
    let exact = discounted_value(&game, Objective::Population, &h, &params, EvalMode::Exact)?;
    let mc = discounted_value(&game, Objective::Population, &h, &params, EvalMode::MonteCarlo { samples: v.samples, seed })?;
    let to_choice = |c: (usize, f64, Vec<f64>)| Choice { index: c.0, value: c.1, values: c.2 };
    let reactions = table.reaction_candidate_set::<f64>();
    let best_reaction = if reactions.is_empty() {
        None
    } else {
        let c = best_reaction_policy(&game, &reactions, &h, &params)?;
        Some(to_choice((c.index, c.value, c.values)))
    };
    let protectors = table.protector_candidate_set::<f64>();
    let best_protector = match table.protector {
        Some(agent) if !protectors.is_empty() => {
            let c = best_protector_policy(&game, AgentId(agent), &protectors, &h, &params)?;
            Some(to_choice((c.index, c.value, c.values)))
        }
        _ => None,
    };
    m.stage("evaluate");
    let report = ValueReport {
        game: v.game.clone(),
        gamma: v.gamma,
        horizon: v.horizon,
        exact: exact.value,
        monte_carlo: mc.value,
        std_error: mc.std_error,
        samples: mc.samples,
        mc_seed: seed,
        within_three_std_errors: (exact.value - mc.value).abs() <= 3.0 * mc.std_error + 1e-9,
        best_reaction,
        protector: table.protector,
        best_protector,
    };
    m.output(&write_json(ctx.out, "value.json", &report)?);
    m.stage("write");
    println!("exact V = {}", report.exact);
    println!("Monte Carlo V = {} ± {} ({} samples)", report.monte_carlo, report.std_error, report.samples);
    if let Some(c) = &report.best_reaction {
        println!("best reaction policy: candidate {} (V_o = {})", c.index, c.value);
    }
    if let Some(c) = &report.best_protector {
        println!("best protector policy: candidate {} (V_pop = {})", c.index, c.value);
    }
    Ok(())
}
