//! Batch experiment driver: config parsing and validation, seeded multi-run
//! execution with incremental persistence and resumption, post-evaluation,
//! and export of analysis artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    self, complexity_table, density_2d, fitness_trajectory, map_behaviours, post_evaluate,
    train_som, GenerationRecord, IndividualRecord, SomConfig,
};
use crate::error::{Error, Result};
use crate::neuroevo::{EvolutionConfig, Genome, Neat, Network};
use crate::novelty::{score_generation, Archive, NoveltyConfig};
use crate::seeds;
use crate::selection::{
    score_fitness, score_pmcns, score_random, score_scalarized, update_criterion, PmcnsState,
    SelectionPolicy,
};
use crate::sim::{write_trajectory_csv, SimConfig};
use crate::tasks::{evaluate, run_trial, Characterisation, Task, TaskConfig};

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_trials() -> usize {
    10
}
fn default_posteval_trials() -> usize {
    100
}
fn default_runs() -> usize {
    30
}
fn default_sample_interval() -> u32 {
    50
}
fn default_true() -> bool {
    true
}

/// Complete description of one experiment: task, selection regime, evolution
/// parameters, scale, and seeding. Everything an output directory contains
/// is a pure function of this config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub task: Task,
    pub characterisation: Characterisation,
    pub selection: SelectionPolicy,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub novelty: NoveltyConfig,
    /// Simulator overrides; defaults to the task's standard setup.
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_posteval_trials")]
    pub posteval_trials: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: u32,
    /// Record (fitness, complexity) of every individual per generation.
    #[serde(default = "default_true")]
    pub record_individuals: bool,
    #[serde(default)]
    pub som: SomConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)?;
        let config = Self::from_json(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn task_config(&self) -> TaskConfig {
        let sim = self.sim.unwrap_or(match self.task {
            Task::Aggregation => SimConfig::aggregation(),
            Task::ResourceSharing => SimConfig::resource_sharing(),
        });
        TaskConfig {
            task: self.task,
            characterisation: self.characterisation,
            sim,
            trials: self.trials,
            sample_interval: self.sample_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            bad.push(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        for (field, result) in [
            ("task/sim", self.task_config().validate()),
            ("evolution", self.evolution.validate()),
            ("novelty", self.novelty.validate()),
            ("selection", self.selection.validate()),
            ("som", self.som.validate()),
        ] {
            if let Err(e) = result {
                bad.push(format!("{field}: {e}"));
            }
        }
        if self.posteval_trials == 0 || self.posteval_trials % self.trials.max(1) != 0 {
            bad.push(format!(
                "posteval_trials: must be a positive multiple of trials ({})",
                self.trials
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            bad.push("output_dir: must not be empty".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Canonical serialized form; the basis of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunStatus {
    pub run: usize,
    pub seed: u64,
    pub completed_generations: u32,
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub generations: u32,
    pub runs: Vec<RunStatus>,
}

impl RunManifest {
    pub fn all_complete(&self) -> bool {
        self.runs.iter().all(|r| r.complete)
    }
}

/// Everything needed to continue a run at a generation boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunState {
    pub config_hash: String,
    pub run: usize,
    pub seed: u64,
    pub completed_generations: u32,
    pub population: Vec<Genome>,
    pub neat: Neat,
    pub archive: Archive,
    pub pmcns: PmcnsState,
}

/// One generation champion, persisted with its genome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChampionRecord {
    pub generation: u32,
    pub fitness: f64,
    pub complexity: usize,
    pub descriptor: Vec<f64>,
    pub genome: String,
}

pub fn run_dir(config: &ExperimentConfig, run: usize) -> PathBuf {
    config.output_dir.join("runs").join(format!("run_{run:03}"))
}

fn records_path(dir: &Path) -> PathBuf {
    dir.join("records.jsonl")
}

fn champions_path(dir: &Path) -> PathBuf {
    dir.join("champions.jsonl")
}

fn state_path(dir: &Path) -> PathBuf {
    dir.join("state.json")
}

/// Write a file atomically: write to a sibling temp path, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(value)?;
    writeln!(file, "{line}")?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Drop any lines past `keep`, repairing logs that ran ahead of the last
/// checkpoint.
fn truncate_jsonl(path: &Path, keep: usize) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() > keep {
        let mut kept = lines[..keep].join("\n");
        if keep > 0 {
            kept.push('\n');
        }
        atomic_write(path, kept.as_bytes())?;
    }
    Ok(())
}

fn fresh_state(config: &ExperimentConfig, hash: &str, run: usize) -> RunState {
    let task = config.task_config();
    let seed = seeds::run_seed(config.master_seed, run);
    let neat = Neat::new(config.evolution.clone(), task.num_inputs() as u32, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::stream_seed(seed, 8));
    let population = neat.initial_population(task.num_inputs() as u32, 3, &mut rng);
    RunState {
        config_hash: hash.to_string(),
        run,
        seed,
        completed_generations: 0,
        population,
        neat,
        archive: Archive::new(),
        pmcns: PmcnsState::default(),
    }
}

fn load_or_init_run(config: &ExperimentConfig, hash: &str, run: usize) -> Result<RunState> {
    let dir = run_dir(config, run);
    fs::create_dir_all(&dir)?;
    let path = state_path(&dir);
    if path.exists() {
        let state: RunState = serde_json::from_str(&fs::read_to_string(&path)?)?;
        if state.config_hash != hash {
            return Err(Error::Config(format!(
                "run {run}: existing state was produced by a different config \
                 (hash {} vs {hash}); refusing to resume",
                state.config_hash
            )));
        }
        let keep = state.completed_generations as usize;
        truncate_jsonl(&records_path(&dir), keep)?;
        truncate_jsonl(&champions_path(&dir), keep)?;
        Ok(state)
    } else {
        Ok(fresh_state(config, hash, run))
    }
}

/// Advance one run up to `limit` completed generations (capped by the
/// configured total), persisting records and a checkpoint at every
/// generation boundary. Returns the completed-generation count.
pub fn advance_run(config: &ExperimentConfig, run: usize, limit: Option<u32>) -> Result<u32> {
    let task = config.task_config();
    let hash = config.config_hash();
    let mut state = load_or_init_run(config, &hash, run)?;
    let dir = run_dir(config, run);
    let target = limit
        .unwrap_or(config.evolution.generations)
        .min(config.evolution.generations);

    for g in state.completed_generations..target {
        let trial_seeds: Vec<u64> = (0..config.trials)
            .map(|t| seeds::trial_seed(state.seed, g, t))
            .collect();
        let results = state
            .population
            .par_iter()
            .map(|genome| evaluate(genome, &task, &trial_seeds))
            .collect::<Result<Vec<_>>>()?;
        let fitnesses: Vec<f64> = results.iter().map(|r| r.fitness).collect();

        let novelties = if config.selection.uses_novelty() {
            let descriptors: Vec<Vec<f64>> =
                results.iter().map(|r| r.descriptor.clone()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[state.seed, 6, g.into()]));
            score_generation(&descriptors, &mut state.archive, &config.novelty, g, &mut rng)
        } else {
            Vec::new()
        };

        let mut mc = None;
        let scores = match config.selection {
            SelectionPolicy::Fitness => score_fitness(&fitnesses),
            SelectionPolicy::Random => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeds::mix(&[state.seed, 5, g.into()]));
                score_random(fitnesses.len(), &mut rng)
            }
            SelectionPolicy::Novelty => novelties.clone(),
            SelectionPolicy::Pmcns { p, s } => {
                let v = update_criterion(&mut state.pmcns, &fitnesses, p, s);
                mc = Some(v);
                score_pmcns(&fitnesses, &novelties, v)
            }
            SelectionPolicy::Scalarization { rho } => {
                score_scalarized(&fitnesses, &novelties, rho)
            }
        };

        let champion = (0..fitnesses.len())
            .max_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]))
            .expect("non-empty population");
        let mut record = GenerationRecord {
            generation: g,
            best_fitness: fitnesses[champion],
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            species: 0,
            archive_size: state.archive.len(),
            mc,
            champion,
            individuals: if config.record_individuals {
                state
                    .population
                    .iter()
                    .zip(&fitnesses)
                    .map(|(genome, &fitness)| IndividualRecord {
                        fitness,
                        complexity: genome.complexity(),
                    })
                    .collect()
            } else {
                Vec::new()
            },
        };
        let champ_record = ChampionRecord {
            generation: g,
            fitness: fitnesses[champion],
            complexity: state.population[champion].complexity(),
            descriptor: results[champion].descriptor.clone(),
            genome: state.population[champion].to_text(),
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[state.seed, 7, g.into()]));
        state.population = state.neat.epoch(&state.population, &scores, &mut rng);
        // The epoch speciates the population just evaluated.
        record.species = state.neat.species().len();

        append_jsonl(&records_path(&dir), &record)?;
        append_jsonl(&champions_path(&dir), &champ_record)?;
        state.completed_generations = g + 1;
        atomic_write(&state_path(&dir), serde_json::to_string(&state)?.as_bytes())?;
    }
    Ok(state.completed_generations)
}

fn build_manifest(config: &ExperimentConfig, hash: &str) -> Result<RunManifest> {
    let mut runs = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let dir = run_dir(config, run);
        let path = state_path(&dir);
        let completed = if path.exists() {
            let state: RunState = serde_json::from_str(&fs::read_to_string(&path)?)?;
            state.completed_generations
        } else {
            0
        };
        runs.push(RunStatus {
            run,
            seed: seeds::run_seed(config.master_seed, run),
            completed_generations: completed,
            complete: completed >= config.evolution.generations,
        });
    }
    Ok(RunManifest {
        config_hash: hash.to_string(),
        generations: config.evolution.generations,
        runs,
    })
}

fn write_manifest(config: &ExperimentConfig, manifest: &RunManifest) -> Result<()> {
    atomic_write(
        &config.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(manifest)?.as_bytes(),
    )
}

/// Execute (or finish) every run of the experiment. A canonical copy of the
/// config is kept beside the outputs; rerunning with a changed config against
/// the same directory is refused.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let hash = config.config_hash();
    fs::create_dir_all(&config.output_dir)?;
    let config_copy = config.output_dir.join("config.json");
    if config_copy.exists() {
        let existing = ExperimentConfig::from_json(&fs::read_to_string(&config_copy)?)?;
        if existing.config_hash() != hash {
            return Err(Error::Config(
                "output directory belongs to a different config; refusing to mix results"
                    .into(),
            ));
        }
    } else {
        atomic_write(&config_copy, config.canonical_json().as_bytes())?;
    }
    for run in 0..config.runs {
        advance_run(config, run, None)?;
        let manifest = build_manifest(config, &hash)?;
        write_manifest(config, &manifest)?;
    }
    let manifest = build_manifest(config, &hash)?;
    write_manifest(config, &manifest)?;
    Ok(manifest)
}

/// Reload the manifest of a previously started experiment directory.
pub fn load_manifest(output_dir: &Path) -> Result<(ExperimentConfig, RunManifest)> {
    let config = ExperimentConfig::load(&output_dir.join("config.json"))?;
    let manifest = build_manifest(&config, &config.config_hash())?;
    Ok((config, manifest))
}

fn require_complete(config: &ExperimentConfig, manifest: &RunManifest) -> Result<()> {
    if config.runs == 0 {
        return Err(Error::Incomplete("experiment has no runs".into()));
    }
    if !manifest.all_complete() {
        let done = manifest.runs.iter().filter(|r| r.complete).count();
        return Err(Error::Incomplete(format!(
            "{done}/{} runs finished",
            config.runs
        )));
    }
    Ok(())
}

fn best_champion(dir: &Path) -> Result<ChampionRecord> {
    let champions: Vec<ChampionRecord> = read_jsonl(&champions_path(dir))?;
    champions
        .into_iter()
        .max_by(|a, b| {
            a.fitness
                .total_cmp(&b.fitness)
                .then(b.generation.cmp(&a.generation))
        })
        .ok_or_else(|| Error::Incomplete("no champions recorded".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostEvaluation {
    pub run: usize,
    pub generation: u32,
    pub evolved_fitness: f64,
    pub post_fitness: f64,
}

/// Post-evaluate the best champion of every run over `posteval_trials`
/// fresh trials and persist the summary.
pub fn post_evaluate_experiment(config: &ExperimentConfig) -> Result<Vec<PostEvaluation>> {
    let manifest = build_manifest(config, &config.config_hash())?;
    require_complete(config, &manifest)?;
    let task = config.task_config();
    let evals = config.posteval_trials / config.trials;
    let mut out = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let champ = best_champion(&run_dir(config, run))?;
        let genome = Genome::from_text(&champ.genome)?;
        let seed = seeds::stream_seed(seeds::run_seed(config.master_seed, run), 9);
        let post_fitness = post_evaluate(&genome, &task, evals, seed)?;
        out.push(PostEvaluation {
            run,
            generation: champ.generation,
            evolved_fitness: champ.fitness,
            post_fitness,
        });
    }
    atomic_write(
        &config.output_dir.join("posteval.json"),
        serde_json::to_string_pretty(&out)?.as_bytes(),
    )?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    /// Per-run gzip CSV trajectory of the best champion.
    Trajectories,
    /// Highest-so-far fitness curves, per run and averaged.
    TrajectoryCurves,
    /// SOM prototypes and cell occupancy over explored behaviours.
    Som,
    /// 2D histogram of the first two descriptor components.
    Density,
    /// Least-complexity-per-fitness-level table.
    Complexity,
}

impl std::str::FromStr for ExportKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ExportKind> {
        match s {
            "trajectories" => Ok(ExportKind::Trajectories),
            "trajectory-curves" => Ok(ExportKind::TrajectoryCurves),
            "som" => Ok(ExportKind::Som),
            "density" => Ok(ExportKind::Density),
            "complexity" => Ok(ExportKind::Complexity),
            other => Err(Error::Config(format!(
                "unknown export '{other}'; expected trajectories, trajectory-curves, \
                 som, density or complexity"
            ))),
        }
    }
}

fn run_records(config: &ExperimentConfig) -> Result<Vec<Vec<GenerationRecord>>> {
    (0..config.runs)
        .map(|run| read_jsonl(&records_path(&run_dir(config, run))))
        .collect()
}

/// Descriptors explored by the experiment: every archived descriptor plus
/// every generation champion's, with champion fitness where known.
fn explored_descriptors(
    config: &ExperimentConfig,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
    let mut all = Vec::new();
    let mut champion_descriptors = Vec::new();
    let mut champion_fitnesses = Vec::new();
    for run in 0..config.runs {
        let dir = run_dir(config, run);
        let state: RunState = serde_json::from_str(&fs::read_to_string(state_path(&dir))?)?;
        for entry in state.archive.entries() {
            all.push(entry.descriptor.clone());
        }
        for champ in read_jsonl::<ChampionRecord>(&champions_path(&dir))? {
            all.push(champ.descriptor.clone());
            champion_descriptors.push(champ.descriptor);
            champion_fitnesses.push(champ.fitness);
        }
    }
    Ok((all, champion_descriptors, champion_fitnesses))
}

fn export_curves(config: &ExperimentConfig) -> Result<PathBuf> {
    let records = run_records(config)?;
    let series: Vec<Vec<f64>> = records
        .iter()
        .map(|run| run.iter().map(|r| r.best_fitness).collect())
        .collect();
    let mean = fitness_trajectory(&series)?;
    let per_run: Vec<Vec<f64>> = series.iter().map(|s| analysis::running_max(s)).collect();
    let mut csv = String::from("generation,mean_highest_so_far");
    for run in 0..config.runs {
        csv.push_str(&format!(",run_{run:03}"));
    }
    csv.push('\n');
    for g in 0..mean.len() {
        csv.push_str(&format!("{g},{}", mean[g]));
        for run in &per_run {
            csv.push_str(&format!(",{}", run[g]));
        }
        csv.push('\n');
    }
    let path = config.output_dir.join("fitness_curves.csv");
    atomic_write(&path, csv.as_bytes())?;
    Ok(path)
}

fn export_trajectories(config: &ExperimentConfig) -> Result<PathBuf> {
    let task = config.task_config();
    for run in 0..config.runs {
        let champ = best_champion(&run_dir(config, run))?;
        let genome = Genome::from_text(&champ.genome)?;
        let network = Network::compile(&genome);
        let seed = seeds::stream_seed(seeds::run_seed(config.master_seed, run), 10);
        let mut samples = Vec::new();
        run_trial(&network, &task, seed, Some(&mut samples))?;
        let mut raw = Vec::new();
        write_trajectory_csv(&samples, &mut raw)?;
        let mut encoder =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        encoder.write_all(&raw)?;
        let bytes = encoder.finish()?;
        atomic_write(
            &run_dir(config, run).join("champion_trajectory.csv.gz"),
            &bytes,
        )?;
    }
    Ok(config.output_dir.join("runs"))
}

fn export_som(config: &ExperimentConfig) -> Result<PathBuf> {
    let (all, champs, fits) = explored_descriptors(config)?;
    let seed = seeds::mix(&[config.master_seed, 11]);
    let grid = train_som(&all, &config.som, seed)?;
    let mut csv = String::from("cell_x,cell_y,count,mean_fitness");
    for d in 0..grid.prototypes[0].len() {
        csv.push_str(&format!(",w{d}"));
    }
    csv.push('\n');
    let cells = map_behaviours(&grid, &champs, &fits)?;
    for (i, (proto, cell)) in grid.prototypes.iter().zip(&cells).enumerate() {
        let (x, y) = grid.cell_position(i);
        csv.push_str(&format!("{x},{y},{},{}", cell.count, cell.mean_fitness));
        for w in proto {
            csv.push_str(&format!(",{w}"));
        }
        csv.push('\n');
    }
    let path = config.output_dir.join("som.csv");
    atomic_write(&path, csv.as_bytes())?;
    Ok(path)
}

fn export_density(config: &ExperimentConfig) -> Result<PathBuf> {
    let (all, _, _) = explored_descriptors(config)?;
    let bins = 20;
    let grid = density_2d(&all, (0, 1), bins)?;
    let mut csv = String::from("x_bin,y_bin,count\n");
    for y in 0..bins {
        for x in 0..bins {
            csv.push_str(&format!("{x},{y},{}\n", grid[y * bins + x]));
        }
    }
    let path = config.output_dir.join("density.csv");
    atomic_write(&path, csv.as_bytes())?;
    Ok(path)
}

const COMPLEXITY_LEVELS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

fn export_complexity(config: &ExperimentConfig) -> Result<PathBuf> {
    if !config.record_individuals {
        return Err(Error::Incomplete(
            "complexity export needs record_individuals = true".into(),
        ));
    }
    let records = run_records(config)?;
    let table = complexity_table(&records, &COMPLEXITY_LEVELS)?;
    let mut csv = String::from("fitness_level,mean_complexity,mean_generation,qualifying_runs\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.level, row.mean_complexity, row.mean_generation, row.qualifying_runs
        ));
    }
    let path = config.output_dir.join("complexity.csv");
    atomic_write(&path, csv.as_bytes())?;
    Ok(path)
}

/// Produce one analysis artifact from a completed experiment directory.
/// Returns the path written. Fails with a "run incomplete" error when runs
/// are missing or unfinished.
pub fn export(config: &ExperimentConfig, what: ExportKind) -> Result<PathBuf> {
    let manifest = build_manifest(config, &config.config_hash())?;
    require_complete(config, &manifest)?;
    match what {
        ExportKind::Trajectories => export_trajectories(config),
        ExportKind::TrajectoryCurves => export_curves(config),
        ExportKind::Som => export_som(config),
        ExportKind::Density => export_density(config),
        ExportKind::Complexity => export_complexity(config),
    }
}
