//! Task definitions: fitness functions, behaviour characterisations and
//! multi-trial evaluation for the aggregation and resource sharing tasks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuroevo::{Genome, Network, NetworkState};
use crate::sim::{
    self, place_robots, record_trajectory, sense_into, SimConfig, TrajectorySample, WorldState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Aggregation,
    ResourceSharing,
}

/// Behaviour characterisation computed per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characterisation {
    /// Sampled mean distance to the swarm centre of mass, length 50.
    Bcm,
    /// Sampled normalized cluster counts, length 50.
    Bcl,
    /// Concatenation of the two above, length 100.
    Bcmcl,
    /// Survivor fraction and mean alive energy, length 2.
    Bsimple,
    /// Bsimple plus mean alive speed and station distance, length 4.
    Bextra,
}

impl Characterisation {
    pub fn descriptor_len(&self, samples: usize) -> usize {
        match self {
            Characterisation::Bcm | Characterisation::Bcl => samples,
            Characterisation::Bcmcl => 2 * samples,
            Characterisation::Bsimple => 2,
            Characterisation::Bextra => 4,
        }
    }

    pub fn needs_energy(&self) -> bool {
        matches!(self, Characterisation::Bsimple | Characterisation::Bextra)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub task: Task,
    pub characterisation: Characterisation,
    pub sim: SimConfig,
    /// Independent trials per evaluation, combined into one fitness.
    pub trials: usize,
    /// Sampling period of the time-series characterisations, in ticks.
    pub sample_interval: u32,
}

impl TaskConfig {
    pub fn aggregation(characterisation: Characterisation) -> Self {
        Self {
            task: Task::Aggregation,
            characterisation,
            sim: SimConfig::aggregation(),
            trials: 10,
            sample_interval: 50,
        }
    }

    pub fn resource_sharing(characterisation: Characterisation) -> Self {
        Self {
            task: Task::ResourceSharing,
            characterisation,
            sim: SimConfig::resource_sharing(),
            trials: 10,
            sample_interval: 50,
        }
    }

    pub fn samples_per_trial(&self) -> usize {
        (self.sim.steps / self.sample_interval) as usize
    }

    pub fn descriptor_len(&self) -> usize {
        self.characterisation.descriptor_len(self.samples_per_trial())
    }

    pub fn num_inputs(&self) -> usize {
        self.sim.input_len()
    }

    pub fn num_outputs(&self) -> usize {
        3
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let mut bad = Vec::new();
        if self.trials == 0 {
            bad.push("trials must be >= 1".to_string());
        }
        if self.sample_interval == 0 || self.sim.steps % self.sample_interval != 0 {
            bad.push("sample_interval must divide the trial length".to_string());
        }
        match self.task {
            Task::Aggregation => {
                if self.sim.energy.is_some() {
                    bad.push("aggregation task has no energy model".to_string());
                }
            }
            Task::ResourceSharing => {
                if self.sim.energy.is_none() {
                    bad.push("resource sharing task requires an energy model".to_string());
                }
            }
        }
        if self.characterisation.needs_energy() && self.sim.energy.is_none() {
            bad.push("energy-based characterisation requires an energy model".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

/// Per-trial measurements feeding fitness and characterisations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialMetrics {
    pub swarm_size: usize,
    pub steps: u32,
    /// Normalized mean distance to the centre of mass, one per sample mark.
    pub cm_samples: Vec<f64>,
    /// Cluster count / N, one per sample mark.
    pub cluster_samples: Vec<f64>,
    /// Alive robots at the end of the trial.
    pub survivors: usize,
    /// Normalized mean distance to the centre of mass at the final tick.
    pub final_spread: f64,
    /// Sum over all ticks and robots of e / e_max (dead robots contribute 0).
    pub energy_fraction_sum: f64,
    /// Ticks with at least one alive robot.
    pub alive_ticks: u32,
    /// Sum over alive ticks of the mean alive-robot energy fraction.
    pub alive_energy_sum: f64,
    /// Sum over alive ticks of the mean alive-robot |wheel speed| / s_max.
    pub alive_speed_sum: f64,
    /// Sum over alive ticks of the mean alive-robot station distance / d_max.
    pub alive_station_sum: f64,
    /// A non-finite number appeared anywhere in the trial.
    pub diverged: bool,
}

impl TrialMetrics {
    pub fn new(config: &TaskConfig) -> Self {
        Self {
            swarm_size: config.sim.swarm_size,
            steps: config.sim.steps,
            ..Self::default()
        }
    }

    /// Accumulate one post-step observation of the world.
    pub fn observe(&mut self, config: &TaskConfig, world: &WorldState) {
        let sim = &config.sim;
        let alive: Vec<&sim::RobotState> =
            world.robots.iter().filter(|r| r.alive).collect();
        if let Some(energy) = sim.energy {
            self.energy_fraction_sum += world
                .robots
                .iter()
                .map(|r| r.energy / energy.e_max)
                .sum::<f64>();
            if !alive.is_empty() {
                self.alive_ticks += 1;
                let n = alive.len() as f64;
                self.alive_energy_sum +=
                    alive.iter().map(|r| r.energy / energy.e_max).sum::<f64>() / n;
                self.alive_speed_sum += alive
                    .iter()
                    .map(|r| r.mean_wheel_speed().abs() / sim.max_speed)
                    .sum::<f64>()
                    / n;
                let (cx, cy) = sim.station_center();
                self.alive_station_sum += alive
                    .iter()
                    .map(|r| (r.x - cx).hypot(r.y - cy) / sim.d_max())
                    .sum::<f64>()
                    / n;
            }
        }
        if world.tick % config.sample_interval == 0 {
            self.cm_samples.push(mean_distance_to_cm(sim, world));
            let positions: Vec<(f64, f64)> =
                alive.iter().map(|r| (r.x, r.y)).collect();
            let clusters = cluster_count(&positions, sim.robot_range);
            self.cluster_samples.push(clusters as f64 / sim.swarm_size as f64);
        }
        for r in &world.robots {
            if !(r.x.is_finite() && r.y.is_finite() && r.energy.is_finite()) {
                self.diverged = true;
            }
        }
    }

    /// Close out the trial from the final world.
    pub fn finish(&mut self, config: &TaskConfig, world: &WorldState) {
        self.survivors = world.alive_count();
        self.final_spread = mean_distance_to_cm(&config.sim, world);
    }
}

/// Mean distance of the robots to their centre of mass, normalized by half
/// the arena diagonal.
pub fn mean_distance_to_cm(config: &SimConfig, world: &WorldState) -> f64 {
    let (cx, cy) = world.center_of_mass();
    let n = world.robots.len() as f64;
    let sum: f64 = world
        .robots
        .iter()
        .map(|r| (r.x - cx).hypot(r.y - cy))
        .sum();
    sum / n / config.d_max()
}

/// Number of connected components of the graph joining robots closer than
/// `threshold` (strict, centre to centre).
pub fn cluster_count(positions: &[(f64, f64)], threshold: f64) -> usize {
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (positions[i], positions[j]);
            if (a.0 - b.0).hypot(a.1 - b.1) < threshold {
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                parent[ra] = rb;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Aggregation fitness of a finished trial: one minus the normalized mean
/// distance to the centre of mass at the final tick.
pub fn fitness_aggregation_trial(config: &SimConfig, world: &WorldState) -> f64 {
    1.0 - mean_distance_to_cm(config, world)
}

/// Resource sharing fitness: 0.9 weighted survivor fraction plus 0.1
/// weighted mean energy fraction over all robots and ticks.
pub fn fitness_resource_trial(metrics: &TrialMetrics) -> f64 {
    let n = metrics.swarm_size as f64;
    let t = metrics.steps as f64;
    0.9 * metrics.survivors as f64 / n + 0.1 * metrics.energy_fraction_sum / (t * n)
}

fn trial_fitness(config: &TaskConfig, metrics: &TrialMetrics) -> f64 {
    match config.task {
        Task::Aggregation => 1.0 - metrics.final_spread,
        Task::ResourceSharing => fitness_resource_trial(metrics),
    }
}

pub fn char_bcm(metrics: &TrialMetrics) -> Vec<f64> {
    metrics.cm_samples.clone()
}

pub fn char_bcl(metrics: &TrialMetrics) -> Vec<f64> {
    metrics.cluster_samples.clone()
}

pub fn char_bcmcl(metrics: &TrialMetrics) -> Vec<f64> {
    let mut v = metrics.cm_samples.clone();
    v.extend_from_slice(&metrics.cluster_samples);
    v
}

pub fn char_bsimple(metrics: &TrialMetrics) -> Vec<f64> {
    let survivors = metrics.survivors as f64 / metrics.swarm_size as f64;
    let energy = if metrics.alive_ticks > 0 {
        metrics.alive_energy_sum / metrics.alive_ticks as f64
    } else {
        0.0
    };
    vec![survivors, energy]
}

pub fn char_bextra(metrics: &TrialMetrics) -> Vec<f64> {
    let mut v = char_bsimple(metrics);
    if metrics.alive_ticks > 0 {
        let a = metrics.alive_ticks as f64;
        v.push(metrics.alive_speed_sum / a);
        v.push(metrics.alive_station_sum / a);
    } else {
        v.extend([0.0, 0.0]);
    }
    v
}

pub fn characterise(config: &TaskConfig, metrics: &TrialMetrics) -> Vec<f64> {
    match config.characterisation {
        Characterisation::Bcm => char_bcm(metrics),
        Characterisation::Bcl => char_bcl(metrics),
        Characterisation::Bcmcl => char_bcmcl(metrics),
        Characterisation::Bsimple => char_bsimple(metrics),
        Characterisation::Bextra => char_bextra(metrics),
    }
}

/// Harmonic mean, with any non-positive value collapsing the result to 0.
pub fn combine_aggregation_trials(fitnesses: &[f64]) -> f64 {
    if fitnesses.is_empty() || fitnesses.iter().any(|&f| f <= 0.0) {
        return 0.0;
    }
    fitnesses.len() as f64 / fitnesses.iter().map(|f| 1.0 / f).sum::<f64>()
}

pub fn combine_resource_trials(fitnesses: &[f64]) -> f64 {
    if fitnesses.is_empty() {
        return 0.0;
    }
    fitnesses.iter().sum::<f64>() / fitnesses.len() as f64
}

fn combine_trials(task: Task, fitnesses: &[f64]) -> f64 {
    match task {
        Task::Aggregation => combine_aggregation_trials(fitnesses),
        Task::ResourceSharing => combine_resource_trials(fitnesses),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub fitness: f64,
    pub descriptor: Vec<f64>,
    pub trial_fitnesses: Vec<f64>,
    pub trial_descriptors: Vec<Vec<f64>>,
    /// The simulation produced non-finite values; fitness was zeroed.
    pub diverged: bool,
}

/// Run one simulation trial of a compiled controller.
pub fn run_trial(
    network: &Network,
    config: &TaskConfig,
    trial_seed: u64,
    mut trajectory: Option<&mut Vec<TrajectorySample>>,
) -> Result<TrialMetrics> {
    let sim = &config.sim;
    let mut world = place_robots(sim, trial_seed)?;
    let mut states: Vec<NetworkState> =
        (0..sim.swarm_size).map(|_| network.new_state()).collect();
    let mut inputs = vec![0.0; sim.input_len()];
    let mut command = [0.0; 3];
    let mut outputs: Vec<[f64; 3]> = Vec::with_capacity(sim.swarm_size);
    let mut metrics = TrialMetrics::new(config);
    if let Some(t) = trajectory.as_deref_mut() {
        record_trajectory(&world, t);
    }
    for _ in 0..sim.steps {
        outputs.clear();
        for i in 0..world.robots.len() {
            if !world.robots[i].alive {
                continue;
            }
            sense_into(sim, &world, i, &mut inputs);
            network.activate_into(&mut states[i], &inputs, &mut command)?;
            outputs.push(command);
        }
        sim::step(sim, &mut world, &outputs);
        metrics.observe(config, &world);
        if let Some(t) = trajectory.as_deref_mut() {
            record_trajectory(&world, t);
        }
    }
    metrics.finish(config, &world);
    Ok(metrics)
}

/// Evaluate a genome over the configured number of trials. Trial seeds are
/// supplied by the caller, one per trial, and are typically shared across
/// the whole population within a generation.
pub fn evaluate(genome: &Genome, config: &TaskConfig, trial_seeds: &[u64]) -> Result<EvaluationResult> {
    if trial_seeds.len() != config.trials {
        return Err(Error::Config(format!(
            "expected {} trial seeds, got {}",
            config.trials,
            trial_seeds.len()
        )));
    }
    let network = Network::compile(genome);
    if network.num_inputs() != config.num_inputs() || network.num_outputs() != config.num_outputs()
    {
        return Err(Error::Config(format!(
            "genome has {} inputs / {} outputs; task needs {} / {}",
            network.num_inputs(),
            network.num_outputs(),
            config.num_inputs(),
            config.num_outputs()
        )));
    }
    let mut trial_fitnesses = Vec::with_capacity(config.trials);
    let mut trial_descriptors = Vec::with_capacity(config.trials);
    let mut diverged = false;
    for &seed in trial_seeds {
        let metrics = run_trial(&network, config, seed, None)?;
        diverged |= metrics.diverged;
        trial_fitnesses.push(trial_fitness(config, &metrics));
        trial_descriptors.push(characterise(config, &metrics));
    }
    let mut fitness = combine_trials(config.task, &trial_fitnesses);
    let len = config.descriptor_len();
    let mut descriptor = vec![0.0; len];
    for d in &trial_descriptors {
        debug_assert_eq!(d.len(), len);
        for (acc, x) in descriptor.iter_mut().zip(d) {
            *acc += x;
        }
    }
    for x in &mut descriptor {
        *x /= trial_descriptors.len() as f64;
    }
    if !fitness.is_finite() || descriptor.iter().any(|x| !x.is_finite()) {
        diverged = true;
    }
    if diverged {
        fitness = 0.0;
    }
    Ok(EvaluationResult { fitness, descriptor, trial_fitnesses, trial_descriptors, diverged })
}
