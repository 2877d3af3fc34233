//! Minimal NEAT: genome representation, recurrent network activation,
//! speciation with fitness sharing, historical-marking crossover and
//! complexifying mutation.

mod genome;
mod innovation;
mod network;
mod reproduction;

pub use genome::{ConnectionGene, Genome, NodeGene, NodeKind};
pub use innovation::{InnovationTracker, SplitInnovation};
pub use network::{Network, NetworkState};
pub use reproduction::{compatibility_distance, crossover, mutate, Neat, Species};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the evolutionary algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: u32,
    /// Fraction of offspring produced by crossover; the rest are mutated clones.
    pub crossover_rate: f64,
    /// Per-connection probability of a weight perturbation.
    pub weight_mutate_prob: f64,
    /// Perturbations are uniform in `[-weight_perturb_range, weight_perturb_range]`.
    pub weight_perturb_range: f64,
    /// Probability that a perturbation is instead a full reset.
    pub weight_reset_prob: f64,
    /// Reset weights are uniform in `[-weight_reset_range, weight_reset_range]`.
    pub weight_reset_range: f64,
    /// Per-offspring probability of adding a connection (recurrent allowed).
    pub add_connection_prob: f64,
    /// Per-offspring probability of splitting a connection with a new node.
    pub add_node_prob: f64,
    /// Compatibility distance coefficients for excess, disjoint and weights.
    pub c_excess: f64,
    pub c_disjoint: f64,
    pub c_weight: f64,
    /// Starting compatibility threshold, adjusted to keep the species count
    /// between `species_target_min` and `species_target_max`.
    pub compatibility_threshold: f64,
    pub threshold_step: f64,
    pub species_target_min: usize,
    pub species_target_max: usize,
    /// Species larger than this copy their champion unchanged.
    pub champion_species_size: usize,
    /// Generations without improvement before a species is denied offspring.
    pub staleness_limit: u32,
    /// Initial connection weights are uniform in `[-initial_weight_range, ..]`.
    pub initial_weight_range: f64,
    /// Fraction of each species allowed to reproduce.
    pub survival_rate: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 200,
            generations: 250,
            crossover_rate: 0.25,
            weight_mutate_prob: 0.10,
            weight_perturb_range: 0.5,
            weight_reset_prob: 0.10,
            weight_reset_range: 2.0,
            add_connection_prob: 0.05,
            add_node_prob: 0.03,
            c_excess: 1.0,
            c_disjoint: 1.0,
            c_weight: 0.4,
            compatibility_threshold: 3.0,
            threshold_step: 0.1,
            species_target_min: 8,
            species_target_max: 12,
            champion_species_size: 5,
            staleness_limit: 15,
            initial_weight_range: 1.0,
            survival_rate: 0.5,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.population_size < 2 {
            bad.push("population_size must be >= 2".to_string());
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("weight_mutate_prob", self.weight_mutate_prob),
            ("weight_reset_prob", self.weight_reset_prob),
            ("add_connection_prob", self.add_connection_prob),
            ("add_node_prob", self.add_node_prob),
            ("survival_rate", self.survival_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("{name} must be in [0,1], got {v}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}
