//! Acceptance gate for the workbench: structural anchors, equation oracles,
//! statistical baselines and trend checks, and bulk invariant suites.
//!
//! Each test prints a single `criterion N (...): PASS` line (visible with
//! `--nocapture`); on failure the same line, with FAIL, is the panic message.
//! Criteria 3 and 5 through 8 evolve real populations and together take on
//! the order of two hours on one core.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use swarmevo::analysis::{post_evaluate, running_max, SomConfig};
use swarmevo::experiment::{run_dir, run_experiment, ChampionRecord, ExperimentConfig, SCHEMA_VERSION};
use swarmevo::neuroevo::{EvolutionConfig, Genome, Neat};
use swarmevo::novelty::{sparseness, NoveltyConfig};
use swarmevo::seeds;
use swarmevo::selection::{
    score_pmcns, score_scalarized, update_criterion, PmcnsState, SelectionPolicy,
};
use swarmevo::sim::{self, RobotState, SimConfig, WorldState};
use swarmevo::tasks::{
    char_bcl, char_bcm, char_bcmcl, char_bextra, char_bsimple, combine_aggregation_trials, evaluate, fitness_aggregation_trial, fitness_resource_trial,
    Characterisation, Task, TaskConfig, TrialMetrics,
};

fn report(n: u32, label: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n} ({label}): {status} [{detail}]");
    assert!(ok, "criterion {n} ({label}): FAIL [{detail}]");
}

// ---------------------------------------------------------------- helpers

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Abramowitz-Stegun 7.1.26 rational approximation of erf, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// One-sided Mann-Whitney p-value for "values in `a` tend to be larger than
/// values in `b`", normal approximation with mid-ranks, tie correction and
/// continuity correction.
fn mann_whitney_greater(a: &[f64], b: &[f64]) -> f64 {
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let mut pooled: Vec<(f64, usize)> = a
        .iter()
        .map(|&v| (v, 0))
        .chain(b.iter().map(|&v| (v, 1)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0.0; pooled.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = rank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let r1: f64 = pooled
        .iter()
        .zip(&ranks)
        .filter(|((_, group), _)| *group == 0)
        .map(|(_, &r)| r)
        .sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let sigma2 = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if sigma2 <= 0.0 {
        return 0.5;
    }
    let z = (u1 - n1 * n2 / 2.0 - 0.5) / sigma2.sqrt();
    1.0 - normal_cdf(z)
}

#[allow(clippy::too_many_arguments)]
fn experiment_config(
    dir: &Path,
    task: Task,
    characterisation: Characterisation,
    selection: SelectionPolicy,
    population: usize,
    generations: u32,
    trials: usize,
    runs: usize,
    master_seed: u64,
) -> ExperimentConfig {
    let config = ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        task,
        characterisation,
        selection,
        evolution: EvolutionConfig {
            population_size: population,
            generations,
            ..EvolutionConfig::default()
        },
        novelty: NoveltyConfig::default(),
        sim: None,
        trials,
        posteval_trials: trials,
        runs,
        master_seed,
        output_dir: dir.to_path_buf(),
        sample_interval: 50,
        record_individuals: false,
        som: SomConfig::default(),
    };
    config.validate().expect("valid acceptance config");
    config
}

/// Low-variance quality of the best solution a run found: take the run's
/// five strongest champions by recorded fitness, re-evaluate each over 100
/// fresh trials, and return the highest mean. Mirrors the post-evaluation
/// protocol the original experiments report.
fn best_posteval(config: &ExperimentConfig, run: usize) -> f64 {
    let text =
        fs::read_to_string(run_dir(config, run).join("champions.jsonl")).unwrap();
    let mut champions: Vec<ChampionRecord> = text
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    champions.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    champions.truncate(5);
    let task = config.task_config();
    let evals = 100 / task.trials;
    champions
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let genome = Genome::from_text(&c.genome).unwrap();
            let seed = seeds::mix(&[config.master_seed, 12, run as u64, i as u64]);
            post_evaluate(&genome, &task, evals, seed).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Highest recorded champion fitness within the first `gen_limit`
/// generations of a run.
fn best_recorded(config: &ExperimentConfig, run: usize, gen_limit: u32) -> f64 {
    let text =
        fs::read_to_string(run_dir(config, run).join("champions.jsonl")).unwrap();
    text.lines()
        .map(|line| serde_json::from_str::<ChampionRecord>(line).unwrap())
        .filter(|c| c.generation < gen_limit)
        .map(|c| c.fitness)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_position(rng: &mut impl Rng, sim: &SimConfig) -> (f64, f64) {
    let r = sim.robot_radius();
    (
        rng.random_range(r..sim.arena_side - r),
        rng.random_range(r..sim.arena_side - r),
    )
}

/// A fabricated world: random poses and wheel commands, and with an energy
/// model a random mix of alive and dead robots.
fn random_world(rng: &mut impl Rng, sim: &SimConfig, tick: u32) -> WorldState {
    let e_max = sim.energy.map_or(1000.0, |e| e.e_max);
    let robots = (0..sim.swarm_size)
        .map(|_| {
            let (x, y) = random_position(rng, sim);
            let alive = sim.energy.is_none() || rng.random::<f64>() < 0.85;
            RobotState {
                x,
                y,
                heading: rng.random_range(0.0..sim::TWO_PI),
                left: if alive { rng.random_range(-sim.max_speed..sim.max_speed) } else { 0.0 },
                right: if alive { rng.random_range(-sim.max_speed..sim.max_speed) } else { 0.0 },
                stopped: false,
                energy: if alive { rng.random_range(1.0..e_max) } else { 0.0 },
                alive,
                charging: false,
            }
        })
        .collect();
    WorldState { robots, tick }
}

/// Independent connected-components clustering by breadth-first search.
fn bfs_clusters(positions: &[(f64, f64)], threshold: f64) -> usize {
    let n = positions.len();
    let mut seen = vec![false; n];
    let mut clusters = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        clusters += 1;
        let mut queue = vec![start];
        seen[start] = true;
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if !seen[j] {
                    let d = (positions[i].0 - positions[j].0)
                        .hypot(positions[i].1 - positions[j].1);
                    if d < threshold {
                        seen[j] = true;
                        queue.push(j);
                    }
                }
            }
        }
    }
    clusters
}

fn oracle_mean_cm_distance(sim: &SimConfig, world: &WorldState) -> f64 {
    let n = world.robots.len() as f64;
    let cx = world.robots.iter().map(|r| r.x).sum::<f64>() / n;
    let cy = world.robots.iter().map(|r| r.y).sum::<f64>() / n;
    world
        .robots
        .iter()
        .map(|r| (r.x - cx).hypot(r.y - cy))
        .sum::<f64>()
        / n
        / sim.d_max()
}

// ---------------------------------------------------------------- criteria

/// Initial controller sizes: 17 inputs + 3 outputs fully connected gives 20
/// neurons and 51 links (complexity 71); 26 inputs gives 29 and 78 (107).
#[test]
fn criterion_1_structural_complexity_anchors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let aggregation = TaskConfig::aggregation(Characterisation::Bcmcl);
    let resource = TaskConfig::resource_sharing(Characterisation::Bextra);
    let mut ok = aggregation.num_inputs() == 17 && resource.num_inputs() == 26;
    for _ in 0..10 {
        let a = Genome::initial(17, 3, 1.0, &mut rng);
        let r = Genome::initial(26, 3, 1.0, &mut rng);
        ok = ok && a.complexity() == 71 && r.complexity() == 107;
        ok = ok && a.check().is_ok() && r.check().is_ok();
    }
    report(1, "structural complexity anchors", ok, "expected 71 and 107");
}

#[test]
fn criterion_2_equation_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let tol = 1e-9;
    let mut checked = 0usize;

    // Sparseness: mean distance to the k nearest of a reference set.
    for _ in 0..100 {
        let dim = rng.random_range(1..6);
        let k = rng.random_range(1..20);
        let refs: Vec<Vec<f64>> = (0..rng.random_range(0..40))
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let expected = if refs.is_empty() {
            0.0
        } else {
            let mut d: Vec<f64> = refs
                .iter()
                .map(|r| {
                    x.iter()
                        .zip(r)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            d.sort_by(f64::total_cmp);
            let k = k.min(d.len());
            d[..k].iter().sum::<f64>() / k as f64
        };
        let got = sparseness(&x, refs.iter().map(Vec::as_slice), k);
        assert!((got - expected).abs() < tol, "sparseness {got} vs {expected}");
        checked += 1;
    }

    // Aggregation trial fitness: 1 - mean centre-of-mass distance / d_max.
    let agg = SimConfig::aggregation();
    for _ in 0..100 {
        let world = random_world(&mut rng, &agg, 0);
        let got = fitness_aggregation_trial(&agg, &world);
        let expected = 1.0 - oracle_mean_cm_distance(&agg, &world);
        assert!((got - expected).abs() < tol, "aggregation fitness");
        checked += 1;
    }

    // Harmonic-mean trial combiner, collapsing on non-positive trials.
    for i in 0..100 {
        let n = rng.random_range(1..12);
        let mut f: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        if i % 4 == 0 {
            f[rng.random_range(0..n)] = -rng.random_range(0.0..0.5);
        }
        let expected = if f.iter().any(|&v| v <= 0.0) {
            0.0
        } else {
            n as f64 / f.iter().map(|v| 1.0 / v).sum::<f64>()
        };
        let got = combine_aggregation_trials(&f);
        assert!((got - expected).abs() < tol, "harmonic combiner");
        checked += 1;
    }

    // Time-sampled characterisations over fabricated observation sequences.
    let agg_task = TaskConfig {
        sim: SimConfig { steps: 200, ..agg },
        sample_interval: 50,
        ..TaskConfig::aggregation(Characterisation::Bcmcl)
    };
    for _ in 0..100 {
        let mut metrics = TrialMetrics::new(&agg_task);
        let mut expected_cm = Vec::new();
        let mut expected_cl = Vec::new();
        for s in 1..=4u32 {
            // A non-sample tick must not contribute.
            metrics.observe(&agg_task, &random_world(&mut rng, &agg_task.sim, s * 50 - 7));
            let world = random_world(&mut rng, &agg_task.sim, s * 50);
            metrics.observe(&agg_task, &world);
            expected_cm.push(oracle_mean_cm_distance(&agg_task.sim, &world));
            let positions: Vec<(f64, f64)> =
                world.robots.iter().map(|r| (r.x, r.y)).collect();
            expected_cl.push(
                bfs_clusters(&positions, agg_task.sim.robot_range) as f64
                    / agg_task.sim.swarm_size as f64,
            );
        }
        let concat: Vec<f64> =
            expected_cm.iter().chain(&expected_cl).copied().collect();
        for (got, expected) in [
            (char_bcm(&metrics), &expected_cm),
            (char_bcl(&metrics), &expected_cl),
            (char_bcmcl(&metrics), &concat),
        ] {
            assert_eq!(got.len(), expected.len());
            for (g, e) in got.iter().zip(expected.iter()) {
                assert!((g - e).abs() < tol, "sampled characterisation");
            }
        }
        checked += 3;
    }

    // Resource fitness and energy characterisations over fabricated runs.
    let steps = 40u32;
    let res_task = TaskConfig {
        sim: SimConfig { steps, ..SimConfig::resource_sharing() },
        sample_interval: 10,
        ..TaskConfig::resource_sharing(Characterisation::Bextra)
    };
    let energy = res_task.sim.energy.unwrap();
    for _ in 0..100 {
        let mut metrics = TrialMetrics::new(&res_task);
        let mut energy_sum = 0.0;
        let mut alive_ticks = 0u32;
        let (mut e_sum, mut v_sum, mut s_sum) = (0.0, 0.0, 0.0);
        let mut last = random_world(&mut rng, &res_task.sim, 0);
        for t in 1..=steps {
            let world = random_world(&mut rng, &res_task.sim, t);
            metrics.observe(&res_task, &world);
            energy_sum += world.robots.iter().map(|r| r.energy / energy.e_max).sum::<f64>();
            let alive: Vec<&RobotState> = world.robots.iter().filter(|r| r.alive).collect();
            if !alive.is_empty() {
                alive_ticks += 1;
                let n = alive.len() as f64;
                e_sum += alive.iter().map(|r| r.energy / energy.e_max).sum::<f64>() / n;
                v_sum += alive
                    .iter()
                    .map(|r| ((r.left + r.right) / 2.0).abs() / res_task.sim.max_speed)
                    .sum::<f64>()
                    / n;
                let (cx, cy) = res_task.sim.station_center();
                s_sum += alive
                    .iter()
                    .map(|r| (r.x - cx).hypot(r.y - cy) / res_task.sim.d_max())
                    .sum::<f64>()
                    / n;
            }
            last = world;
        }
        metrics.finish(&res_task, &last);
        let n = res_task.sim.swarm_size as f64;
        let survivors = last.robots.iter().filter(|r| r.alive).count() as f64;
        let expected_fs =
            0.9 * survivors / n + 0.1 * energy_sum / (steps as f64 * n);
        let got_fs = fitness_resource_trial(&metrics);
        assert!((got_fs - expected_fs).abs() < tol, "resource fitness");

        let a = alive_ticks as f64;
        let expected_extra = [
            survivors / n,
            if alive_ticks > 0 { e_sum / a } else { 0.0 },
            if alive_ticks > 0 { v_sum / a } else { 0.0 },
            if alive_ticks > 0 { s_sum / a } else { 0.0 },
        ];
        let simple = char_bsimple(&metrics);
        let extra = char_bextra(&metrics);
        assert_eq!(simple, extra[..2].to_vec());
        for (g, e) in extra.iter().zip(expected_extra.iter()) {
            assert!((g - e).abs() < tol, "energy characterisation");
        }
        checked += 2;
    }

    // Progressive criterion update: nearest-rank percentile, ratcheted step.
    for _ in 0..100 {
        let n = rng.random_range(1..40);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let p = rng.random_range(0.01..1.0);
        let s = rng.random_range(0.01..1.0);
        let mc0 = rng.random_range(0.0..1.0);
        let mut sorted = f.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
        let v = sorted[rank - 1];
        let expected = mc0 + ((v - mc0) * s).max(0.0);
        let mut state = PmcnsState { mc: mc0 };
        let got = update_criterion(&mut state, &f, p, s);
        assert!((got - expected).abs() < tol, "criterion update");
        checked += 1;
    }

    // Criterion gate: novelty where fitness meets the threshold, else zero.
    for _ in 0..100 {
        let n = rng.random_range(1..40);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let nov: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let mc = rng.random_range(0.0..1.0);
        let got = score_pmcns(&f, &nov, mc);
        for i in 0..n {
            let expected = if f[i] >= mc { nov[i] } else { 0.0 };
            assert!((got[i] - expected).abs() < tol, "criterion gate");
        }
        checked += 1;
    }

    // Scalarization: min-max normalized blend with weight rho on novelty.
    for i in 0..100 {
        let n = rng.random_range(1..40);
        let f: Vec<f64> = if i % 5 == 0 {
            vec![rng.random_range(0.0..1.0); n]
        } else {
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
        };
        let nov: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let rho = rng.random_range(0.0..1.0);
        let norm = |v: &[f64]| -> Vec<f64> {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                v.iter().map(|x| (x - lo) / (hi - lo)).collect()
            } else {
                vec![0.5; v.len()]
            }
        };
        let (nf, nn) = (norm(&f), norm(&nov));
        let got = score_scalarized(&f, &nov, rho);
        for j in 0..n {
            let expected = (1.0 - rho) * nf[j] + rho * nn[j];
            assert!((got[j] - expected).abs() < tol, "scalarization");
        }
        checked += 1;
    }

    report(2, "equation oracles", checked >= 1000, &format!("{checked} instances"));
}

/// Freshly seeded random populations already solve aggregation fairly well;
/// the mean best initial-generation fitness sits near 0.55.
#[test]
fn criterion_3_random_population_fitness_anchor() {
    let task = TaskConfig::aggregation(Characterisation::Bcmcl);
    let evolution = EvolutionConfig::default();
    let neat = Neat::new(evolution.clone(), 17, 3);
    let mut bests = Vec::new();
    for run in 0..30 {
        let seed = seeds::run_seed(2026, run);
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::stream_seed(seed, 8));
        let population = neat.initial_population(17, 3, &mut rng);
        assert_eq!(population.len(), 200);
        let trial_seeds: Vec<u64> =
            (0..task.trials).map(|t| seeds::trial_seed(seed, 0, t)).collect();
        let best = population
            .iter()
            .map(|g| evaluate(g, &task, &trial_seeds).unwrap().fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        bests.push(best);
    }
    let m = mean(&bests);
    report(
        3,
        "random population fitness anchor",
        (0.45..=0.65).contains(&m),
        &format!("mean best initial fitness {m:.4}, want 0.55 +/- 0.10"),
    );
}

/// The worst aggregation outcome, the swarm split across opposite corners,
/// scores a small but positive fitness.
#[test]
fn criterion_4_fitness_floor_anchor() {
    let sim = SimConfig::aggregation();
    let split_world = |inset: f64| -> WorldState {
        let hi = sim.arena_side - inset;
        let robots = (0..sim.swarm_size)
            .map(|i| {
                let (x, y) = if i < 4 { (inset, inset) } else { (hi, hi) };
                RobotState {
                    x,
                    y,
                    heading: 0.0,
                    left: 0.0,
                    right: 0.0,
                    stopped: true,
                    energy: 0.0,
                    alive: true,
                    charging: false,
                }
            })
            .collect();
        WorldState { robots, tick: sim.steps }
    };
    let mut ok = true;
    let mut floors = Vec::new();
    for inset in [0.0, sim.robot_radius()] {
        let world = split_world(inset);
        let got = fitness_aggregation_trial(&sim, &world);
        // Closed form: groups of a and b robots at opposite corners of a
        // square with diagonal q give mean CM distance 2ab q / (a + b)^2.
        let (a, b) = (4.0, 3.0);
        let q = (sim.arena_side - 2.0 * inset) * std::f64::consts::SQRT_2;
        let expected = 1.0 - (2.0 * a * b * q) / ((a + b) * (a + b)) / sim.d_max();
        ok = ok && (got - expected).abs() < 1e-12 && (0.02..=0.06).contains(&got);
        floors.push(got);
    }
    report(
        4,
        "fitness floor anchor",
        ok,
        &format!("corner-split fitness {floors:?}, want within [0.02, 0.06]"),
    );
}

/// Random selection never solves resource sharing: the run-averaged
/// post-evaluated best fitness across 5 desk-scale runs stays at or below
/// 0.25 (the source's claim concerns the method's run-averaged trajectory).
#[test]
fn criterion_5_resource_random_baseline() {
    let tmp = TempDir::new().unwrap();
    let config = experiment_config(
        tmp.path(),
        Task::ResourceSharing,
        Characterisation::Bsimple,
        SelectionPolicy::Random,
        50,
        100,
        5,
        5,
        510,
    );
    run_experiment(&config).expect("experiment completes");
    let peaks: Vec<f64> =
        (0..config.runs).map(|r| best_posteval(&config, r)).collect();
    let average = mean(&peaks);
    report(
        5,
        "resource random baseline",
        average <= 0.25,
        &format!("run-averaged post-evaluated best {average:.4} (runs {peaks:?}), want <= 0.25"),
    );
}

/// Novelty search bootstraps aggregation faster than fitness-based
/// evolution: higher mean highest-so-far recorded fitness within the first
/// 20 generations, one-sided Mann-Whitney p < 0.1. This compares the
/// fitness-found-so-far curves the runs actually produce; the noise in the
/// 5-trial scores is symmetric across the two arms.
#[test]
fn criterion_6_bootstrapping_trend() {
    let (dir_ns, dir_fit) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let make = |dir: &Path, selection, seed| {
        experiment_config(
            dir,
            Task::Aggregation,
            Characterisation::Bcmcl,
            selection,
            50,
            50,
            5,
            10,
            seed,
        )
    };
    let ns_config = make(dir_ns.path(), SelectionPolicy::Novelty, 610);
    let fit_config = make(dir_fit.path(), SelectionPolicy::Fitness, 611);
    run_experiment(&ns_config).expect("experiment completes");
    run_experiment(&fit_config).expect("experiment completes");
    let at_20 = |config: &ExperimentConfig| -> Vec<f64> {
        (0..config.runs).map(|r| best_recorded(config, r, 20)).collect()
    };
    let (ns_20, fit_20) = (at_20(&ns_config), at_20(&fit_config));
    let p = mann_whitney_greater(&ns_20, &fit_20);
    let (m_ns, m_fit) = (mean(&ns_20), mean(&fit_20));
    report(
        6,
        "bootstrapping trend",
        m_ns > m_fit && p < 0.1,
        &format!("gen-20 means {m_ns:.4} vs {m_fit:.4}, p {p:.4}"),
    );
}

/// Resource sharing deceives fitness-based evolution: novelty search with the
/// two-element descriptor reaches a higher median, and stalls far less often.
#[test]
fn criterion_7_deception_trend() {
    let (dir_ns, dir_fit) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let make = |dir: &Path, selection, seed| {
        experiment_config(
            dir,
            Task::ResourceSharing,
            Characterisation::Bsimple,
            selection,
            50,
            150,
            5,
            10,
            seed,
        )
    };
    let ns_config = make(dir_ns.path(), SelectionPolicy::Novelty, 710);
    let fit_config = make(dir_fit.path(), SelectionPolicy::Fitness, 711);
    run_experiment(&ns_config).expect("experiment completes");
    run_experiment(&fit_config).expect("experiment completes");
    let finals = |config: &ExperimentConfig| -> Vec<f64> {
        (0..config.runs).map(|r| best_posteval(config, r)).collect()
    };
    let (ns_final, fit_final) = (finals(&ns_config), finals(&fit_config));
    let stalled = |v: &[f64]| v.iter().filter(|&&f| f < 0.3).count();
    let (med_ns, med_fit) = (median(&ns_final), median(&fit_final));
    let (stall_ns, stall_fit) = (stalled(&ns_final), stalled(&fit_final));
    report(
        7,
        "deception trend",
        med_ns > med_fit && stall_fit >= 3 && stall_ns <= 1,
        &format!(
            "medians {med_ns:.4} vs {med_fit:.4}, stalls {stall_ns}/10 vs {stall_fit}/10"
        ),
    );
}

/// Steering novelty search by fitness does not hurt: with the four-element
/// descriptor both the progressive criterion and the scalarized blend match
/// or beat pure novelty search on median best fitness.
#[test]
fn criterion_8_variant_ordering() {
    let dirs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
    let methods = [
        SelectionPolicy::Novelty,
        SelectionPolicy::Pmcns { p: 0.5, s: 0.25 },
        SelectionPolicy::Scalarization { rho: 0.75 },
    ];
    let mut medians = Vec::new();
    for (i, selection) in methods.into_iter().enumerate() {
        let config = experiment_config(
            dirs[i].path(),
            Task::ResourceSharing,
            Characterisation::Bextra,
            selection,
            50,
            150,
            5,
            10,
            810 + i as u64,
        );
        run_experiment(&config).expect("experiment completes");
        let finals: Vec<f64> =
            (0..config.runs).map(|r| best_posteval(&config, r)).collect();
        medians.push(median(&finals));
    }
    report(
        8,
        "variant ordering",
        medians[1] >= medians[0] && medians[2] >= medians[0],
        &format!(
            "medians: novelty {:.4}, pmcns {:.4}, scalarization {:.4}",
            medians[0], medians[1], medians[2]
        ),
    );
}

#[test]
fn criterion_9_invariant_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    let tiny_agg = TaskConfig {
        sim: SimConfig { steps: 50, swarm_size: 3, ..SimConfig::aggregation() },
        trials: 1,
        sample_interval: 10,
        ..TaskConfig::aggregation(Characterisation::Bcmcl)
    };
    let tiny_res = TaskConfig {
        sim: SimConfig { steps: 50, swarm_size: 3, ..SimConfig::resource_sharing() },
        trials: 1,
        sample_interval: 10,
        ..TaskConfig::resource_sharing(Characterisation::Bextra)
    };

    // Determinism: re-evaluating the same genome under the same seed is
    // bit-identical.
    for case in 0..1000 {
        let task = if case % 2 == 0 { &tiny_agg } else { &tiny_res };
        let genome = Genome::initial(task.num_inputs() as u32, 3, 1.0, &mut rng);
        let seed = rng.random::<u64>();
        let a = evaluate(&genome, task, &[seed]).unwrap();
        let b = evaluate(&genome, task, &[seed]).unwrap();
        assert_eq!(a.fitness.to_bits(), b.fitness.to_bits(), "determinism");
        assert_eq!(a.descriptor.len(), b.descriptor.len());
        for (x, y) in a.descriptor.iter().zip(&b.descriptor) {
            assert_eq!(x.to_bits(), y.to_bits(), "determinism");
        }
    }

    // Energy bounds and bookkeeping under random control.
    let res_sim = tiny_res.sim;
    let energy = res_sim.energy.unwrap();
    for _ in 0..1000 {
        let mut world = random_world(&mut rng, &res_sim, 0);
        for _ in 0..20 {
            let before = world.clone();
            let outputs: Vec<[f64; 3]> = (0..world.alive_count())
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect();
            sim::step(&res_sim, &mut world, &outputs);
            assert!(world.alive_count() <= before.alive_count(), "revival");
            for (now, was) in world.robots.iter().zip(&before.robots) {
                assert!(now.energy <= energy.e_max + 1e-9, "energy ceiling");
                assert!(now.energy >= 0.0, "energy floor");
                if now.energy > was.energy {
                    let (cx, cy) = res_sim.station_center();
                    let dist = (now.x - cx).hypot(now.y - cy);
                    assert!(
                        now.charging
                            && now.left == 0.0
                            && now.right == 0.0
                            && dist <= energy.station_radius,
                        "energy gained outside legitimate charging"
                    );
                }
                if !was.alive {
                    assert!(!now.alive, "dead robot revived");
                    assert_eq!(now.x, was.x, "dead robot moved");
                    assert_eq!(now.y, was.y, "dead robot moved");
                }
                let r = res_sim.robot_radius();
                assert!(now.x >= r - 1e-9 && now.x <= res_sim.arena_side - r + 1e-9);
                assert!(now.y >= r - 1e-9 && now.y <= res_sim.arena_side - r + 1e-9);
            }
            assert!(
                world.robots.iter().filter(|r| r.charging).count() <= 1,
                "exclusive station"
            );
        }
    }

    // Collision resolution: stationary overlapping robots separate.
    let agg_sim = SimConfig { swarm_size: 4, ..tiny_agg.sim };
    for case in 0..1000 {
        let mut world = random_world(&mut rng, &agg_sim, 0);
        if case % 2 == 0 {
            // Force a dense pile-up in a small box.
            let (bx, by) = random_position(&mut rng, &agg_sim);
            for robot in &mut world.robots {
                robot.x = (bx + rng.random_range(-0.05..0.05))
                    .clamp(agg_sim.robot_radius(), agg_sim.arena_side - agg_sim.robot_radius());
                robot.y = (by + rng.random_range(-0.05..0.05))
                    .clamp(agg_sim.robot_radius(), agg_sim.arena_side - agg_sim.robot_radius());
            }
        }
        let stop = vec![[0.0, 0.0, 1.0]; agg_sim.swarm_size];
        for _ in 0..20 {
            sim::step(&agg_sim, &mut world, &stop);
        }
        for i in 0..world.robots.len() {
            for j in i + 1..world.robots.len() {
                let d = (world.robots[i].x - world.robots[j].x)
                    .hypot(world.robots[i].y - world.robots[j].y);
                assert!(d >= agg_sim.robot_diameter - 1e-6, "overlap {d}");
            }
        }
    }

    // The progressive minimal criterion never decreases.
    for _ in 0..1000 {
        let mut state = PmcnsState::default();
        let p = rng.random_range(0.01..1.0);
        let s = rng.random_range(0.01..1.0);
        let mut previous = 0.0;
        for _ in 0..20 {
            let n = rng.random_range(1..30);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let mc = update_criterion(&mut state, &f, p, s);
            assert!(mc.is_finite() && mc >= previous, "criterion decreased");
            previous = mc;
        }
    }

    // Archive growth is binomial: insertion count stays within 3 sigma.
    {
        use swarmevo::novelty::{score_generation, Archive};
        let config = NoveltyConfig::default();
        let mut archive = Archive::new();
        let per_generation = 5;
        for g in 0..1000u32 {
            let descriptors: Vec<Vec<f64>> = (0..per_generation)
                .map(|_| vec![rng.random(), rng.random()])
                .collect();
            score_generation(&descriptors, &mut archive, &config, g, &mut rng);
        }
        let n = (1000 * per_generation) as f64;
        let expected = n * config.p_add;
        let sigma = (n * config.p_add * (1.0 - config.p_add)).sqrt();
        let deviation = (archive.len() as f64 - expected).abs();
        assert!(
            deviation <= 3.0 * sigma,
            "archive size {} vs expected {expected:.1} +/- {:.1}",
            archive.len(),
            3.0 * sigma
        );
    }

    // Descriptor length and range for every characterisation.
    let variants = [
        TaskConfig { characterisation: Characterisation::Bcm, ..tiny_agg },
        TaskConfig { characterisation: Characterisation::Bcl, ..tiny_agg },
        TaskConfig { characterisation: Characterisation::Bcmcl, ..tiny_agg },
        TaskConfig { characterisation: Characterisation::Bsimple, ..tiny_res },
        TaskConfig { characterisation: Characterisation::Bextra, ..tiny_res },
    ];
    for case in 0..1000 {
        let task = &variants[case % variants.len()];
        let genome = Genome::initial(task.num_inputs() as u32, 3, 1.0, &mut rng);
        let result = evaluate(&genome, task, &[rng.random()]).unwrap();
        assert_eq!(result.descriptor.len(), task.descriptor_len(), "length");
        for &v in &result.descriptor {
            assert!((0.0..=1.0).contains(&v), "descriptor element {v}");
        }
        assert!((0.0..=1.0).contains(&result.fitness), "fitness range");
    }

    // Highest-so-far trajectories are monotone envelopes of their series.
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let series: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let env = running_max(&series);
        assert_eq!(env.len(), series.len());
        let mut best = f64::NEG_INFINITY;
        for (e, s) in env.iter().zip(&series) {
            best = best.max(*s);
            assert_eq!(*e, best, "running max");
        }
    }

    // A trained map partitions the data it maps.
    {
        use swarmevo::analysis::{map_behaviours, train_som};
        let som = SomConfig { width: 2, height: 2, epochs: 5, ..SomConfig::default() };
        for case in 0..1000u64 {
            let data: Vec<Vec<f64>> =
                (0..8).map(|_| vec![rng.random(), rng.random()]).collect();
            let fitnesses: Vec<f64> = (0..8).map(|_| rng.random()).collect();
            let grid = train_som(&data, &som, case).unwrap();
            let cells = map_behaviours(&grid, &data, &fitnesses).unwrap();
            assert_eq!(cells.len(), 4);
            assert_eq!(cells.iter().map(|c| c.count).sum::<usize>(), data.len());
            for (d, &f) in data.iter().zip(&fitnesses) {
                let w = grid.winner(d);
                assert!(cells[w].count > 0);
                let _ = f;
            }
        }
    }

    report(9, "invariant suites", true, "8 suites x 1000 cases");
}
