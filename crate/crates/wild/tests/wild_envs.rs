use potlab_game::{seeded_rng, simulate, step, AgentId, Distribution, GameError, Move, StateHistory, WorldState};
use potlab_wild::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const P_THRESHOLD: f64 = 1e-3;
const SAMPLES: usize = 100_000;

/// Pearson χ² goodness of fit of `draw` against `dist`; returns the p-value.
fn chi_square_p<T: PartialEq + Clone>(dist: &Distribution<T, f64>, mut draw: impl FnMut() -> T) -> f64 {
    let outcomes = dist.outcomes();
    let mut counts = vec![0usize; outcomes.len()];
    for _ in 0..SAMPLES {
        let x = draw();
        let k = outcomes.iter().position(|(o, _)| *o == x).expect("sample in support");
        counts[k] += 1;
    }
    let mut stat = 0.0;
    let mut cells = 0;
    for ((_, p), n) in outcomes.iter().zip(&counts) {
        let expected = p * SAMPLES as f64;
        if expected > 0.0 {
            stat += (*n as f64 - expected).powi(2) / expected;
            cells += 1;
        }
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Collapses repeated outcomes so the χ² cells are distinct.
fn merged<T: PartialEq + Clone>(dist: &Distribution<T, f64>) -> Distribution<T, f64> {
    let mut out: Vec<(T, f64)> = Vec::new();
    for (t, p) in dist.outcomes() {
        match out.iter_mut().find(|(o, _)| o == t) {
            Some((_, q)) => *q += p,
            None => out.push((t.clone(), *p)),
        }
    }
    Distribution::new(out).unwrap()
}

fn actions_are_declared<S: WorldState, A: Move, R: Move>(env: &WildEnv<S, A, R>, horizon: usize, seed: u64) {
    let game = env.game(true).unwrap();
    let traj = simulate(&game, horizon, seed).unwrap();
    let mut history = game.initial_history();
    for s in &traj.steps {
        assert!(game.actions(s.agent, &history).contains(&s.action));
        history.push(s.state.clone());
    }
}

fn pot_beats_baseline<S: WorldState, A: Move, R: Move>(env: &WildEnv<S, A, R>, horizon: usize) -> (f64, f64) {
    let seeds: Vec<u64> = (0..100).collect();
    let with = run_wild_experiment(env, true, horizon, &seeds).unwrap();
    let without = run_wild_experiment(env, false, horizon, &seeds).unwrap();
    (with.mean_population, without.mean_population)
}

#[test]
fn uber_base_price_when_supply_suffices() {
    let cfg = UberConfig { arrival_rate: 3.0, arrival_cap: 6, ..UberConfig::default() };
    let env = build_uber_env(&cfg).unwrap();
    for seed in 0..20 {
        let traj = env.trajectory(false, 50, seed).unwrap();
        assert!(traj.steps.iter().all(|s| s.reaction == Price::Base));
    }
}

#[test]
fn uber_surges_while_everyone_is_off() {
    let cfg = UberConfig { honest_drivers: 0, off_duration: 4, on_duration: 2, ..UberConfig::default() };
    let env = build_uber_env(&cfg).unwrap();
    for seed in 0..20 {
        let traj = env.trajectory(true, 12, seed).unwrap();
        for s in &traj.steps {
            let phase = (s.time - 1) % 6;
            // the platform reacts to the supply of the previous step
            if (1..4).contains(&phase) {
                assert_eq!(s.action, DriverAction::Off);
                assert_eq!(s.reaction, Price::Surge, "t = {}", s.time);
            }
        }
    }
}

#[test]
fn uber_cycle_earns_more_than_always_on() {
    let env = build_uber_env(&UberConfig::default()).unwrap();
    let seeds: Vec<u64> = (0..1000).collect();
    let with = run_wild_experiment(&env, true, 40, &seeds).unwrap();
    let without = run_wild_experiment(&env, false, 40, &seeds).unwrap();
    assert!(with.mean_population > without.mean_population, "{} vs {}", with.mean_population, without.mean_population);
}

#[test]
fn uber_arrivals_follow_binomial() {
    let env = build_uber_env(&UberConfig::default()).unwrap();
    let history = env.game.initial_history();
    let dist = env.game.transition_model().distribution(&history, &DriverAction::On, &Price::Base).unwrap();
    let dist = merged(&dist);
    let mut rng = seeded_rng(5);
    let p = chi_square_p(&dist, || dist.sample(&mut rng).clone());
    assert!(p > P_THRESHOLD, "p = {p}");
}

#[test]
fn pokemon_spawns_only_at_the_only_featured_cell() {
    let mut features = vec![[0u32; FEATURE_KINDS]; 9];
    features[4] = [1, 0, 0];
    let env = build_pokemon_env(&PokemonConfig { features, ..PokemonConfig::default() }).unwrap();
    let traj = env.trajectory(false, 200, 1).unwrap();
    assert!(traj.steps.iter().all(|s| s.reaction == 4 && s.population == 1.0));
}

#[test]
fn pokemon_home_probability_grows_with_features() {
    let cfg = PokemonConfig::default();
    let mut features = cfg.features.clone();
    let mut last = cfg.spawn_probabilities(&features)[cfg.home];
    for k in 0..10 {
        features[cfg.home][k % FEATURE_KINDS] += 1;
        let p = cfg.spawn_probabilities(&features)[cfg.home];
        assert!(p >= last);
        last = p;
    }
}

#[test]
fn pokemon_spawn_frequencies_match_weights() {
    let cfg = PokemonConfig::default();
    let env = build_pokemon_env(&cfg).unwrap();
    let history = env.game.initial_history();
    let dist = env.game.reaction_policy().distribution(&history, &PokemonAction::Pass).unwrap();
    let want = cfg.spawn_probabilities(&cfg.features);
    let mut rng = seeded_rng(9);
    let mut counts = vec![0usize; cfg.cells()];
    for _ in 0..SAMPLES {
        counts[*dist.sample(&mut rng)] += 1;
    }
    for (n, p) in counts.iter().zip(&want) {
        assert!((*n as f64 / SAMPLES as f64 - p).abs() < 0.01);
    }
    let mut rng = seeded_rng(10);
    let p = chi_square_p(&dist, || *dist.sample(&mut rng));
    assert!(p > P_THRESHOLD, "p = {p}");
}

#[test]
fn pokemon_edit_beyond_budget_is_invalid() {
    let cfg = PokemonConfig { budget: 2, ..PokemonConfig::default() };
    let env = build_pokemon_env(&cfg).unwrap();
    let game = env.game(true).unwrap();
    let mut history: StateHistory<PokemonState> = game.initial_history();
    let mut rng = seeded_rng(0);
    let edit = PokemonAction::AddFeature { cell: 0, kind: 0 };
    step(&game, &mut history, AgentId(0), &edit, &mut rng).unwrap();
    step(&game, &mut history, AgentId(0), &edit, &mut rng).unwrap();
    let err = step(&game, &mut history, AgentId(0), &edit, &mut rng).unwrap_err();
    assert!(matches!(err, GameError::InvalidAction { agent: 0, .. }));
    assert!(step(&game, &mut history, AgentId(0), &PokemonAction::Pass, &mut rng).is_ok());
}

#[test]
fn adnauseam_honest_profile_converges_to_dominant_interest() {
    let cfg = AdConfig {
        categories: 4,
        users: vec![
            AdUser { relevance: vec![0.05, 0.05, 0.95, 0.05], protector: false },
            AdUser { relevance: vec![0.25; 4], protector: true },
        ],
    };
    let env = build_adnauseam_env(&cfg).unwrap();
    for seed in 0..10 {
        let traj = env.trajectory(false, 1000, seed).unwrap();
        let visits: Vec<_> = traj.steps.iter().filter(|s| s.agent == AgentId(0)).collect();
        assert_eq!(visits.len(), 500);
        let late = &visits[400..];
        let hits = late.iter().filter(|s| s.reaction == 2).count();
        assert!(hits as f64 / late.len() as f64 >= 0.95, "seed {seed}: {hits}");
    }
}

#[test]
fn adnauseam_click_all_keeps_tallies_level() {
    let cfg = AdConfig::default();
    let env = build_adnauseam_env(&cfg).unwrap();
    let n = cfg.users.len();
    let traj = env.trajectory(true, 400, 3).unwrap();
    for (k, s) in traj.steps.iter().enumerate() {
        for p in cfg.protectors() {
            let clicks = &s.state.profiles[p.0].clicks;
            // visits of user p up to and including time k + 1
            let t = (k + 1 + n - 1 - p.0) / n;
            assert_eq!(clicks.iter().sum::<u32>() as usize, t);
            let level = t as f64 / cfg.categories as f64;
            assert!(clicks.iter().all(|c| (*c as f64 - level).abs() <= 1.0));
        }
    }
}

#[test]
fn adnauseam_protectors_do_no_worse_than_honest_users() {
    let cfg = AdConfig::default();
    let env = build_adnauseam_env(&cfg).unwrap();
    let protectors = cfg.protectors();
    for seed in 0..50 {
        let traj = env.trajectory(true, 300, seed).unwrap();
        let mean = |pick: &dyn Fn(usize) -> bool| {
            let ids: Vec<usize> = (0..cfg.users.len()).filter(|i| pick(*i)).collect();
            let total: f64 = ids.iter().map(|i| traj.total_benefit(*i)).sum();
            total / ids.len() as f64
        };
        let prot = mean(&|i| protectors.contains(&AgentId(i)));
        let honest = mean(&|i| !protectors.contains(&AgentId(i)));
        assert!(prot >= honest, "seed {seed}: {prot} < {honest}");
    }
}

#[test]
fn adnauseam_click_outcomes_follow_relevance() {
    let cfg = AdConfig::default();
    let env = build_adnauseam_env(&cfg).unwrap();
    let history = env.game.initial_history();
    // user 0 is served category 0 first, relevance 0.05
    let dist = env.game.transition_model().distribution(&history, &AdAction::Honest, &0).unwrap();
    assert_eq!(dist.len(), 2);
    let mut rng = seeded_rng(4);
    let p = chi_square_p(&dist, || dist.sample(&mut rng).clone());
    assert!(p > P_THRESHOLD, "p = {p}");
}

#[test]
fn protector_actions_are_declared() {
    actions_are_declared(&build_uber_env(&UberConfig::default()).unwrap(), 50, 0);
    actions_are_declared(&build_pokemon_env(&PokemonConfig::default()).unwrap(), 50, 0);
    actions_are_declared(&build_adnauseam_env(&AdConfig::default()).unwrap(), 100, 0);
}

#[test]
fn every_env_improves_population_benefit() {
    let (w, b) = pot_beats_baseline(&build_uber_env(&UberConfig::default()).unwrap(), 40);
    assert!(w > b, "uber {w} vs {b}");
    let (w, b) = pot_beats_baseline(&build_pokemon_env(&PokemonConfig::default()).unwrap(), 30);
    assert!(w > b, "pokemon {w} vs {b}");
    let (w, b) = pot_beats_baseline(&build_adnauseam_env(&AdConfig::default()).unwrap(), 200);
    assert!(w > b, "adnauseam {w} vs {b}");
}

#[test]
fn experiments_are_reproducible_and_recomputable() {
    let env = build_uber_env(&UberConfig::default()).unwrap();
    let seeds = [3, 1, 4, 1, 5];
    let a = run_wild_experiment(&env, false, 30, &seeds).unwrap();
    let b = run_wild_experiment(&env, false, 30, &seeds).unwrap();
    assert_eq!(a, b);
    let mut sum = 0.0;
    for (run, seed) in a.runs.iter().zip(seeds) {
        let traj = env.trajectory(false, 30, seed).unwrap();
        let total: f64 = traj.steps.iter().map(|s| s.population).sum();
        assert_eq!(run.total_population, total);
        assert_eq!(run.mean_population, total / 30.0);
        sum += run.mean_population;
    }
    assert_eq!(a.mean_population, sum / seeds.len() as f64);
    assert!(run_wild_experiment(&env, false, 30, &[]).is_err());
}
