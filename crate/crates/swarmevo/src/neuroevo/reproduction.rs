use rand::Rng;
use serde::{Deserialize, Serialize};

use super::genome::{ConnectionGene, Genome, NodeGene, NodeKind};
use super::innovation::InnovationTracker;
use super::EvolutionConfig;

/// Standard NEAT compatibility distance
/// `c1 * E / N + c2 * D / N + c3 * mean weight difference` over excess `E`,
/// disjoint `D` and matching genes, with `N` the larger connection count.
pub fn compatibility_distance(a: &Genome, b: &Genome, config: &EvolutionConfig) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (ca, cb) = (&a.connections, &b.connections);
    let max_a = ca.last().map_or(0, |c| c.innovation);
    let max_b = cb.last().map_or(0, |c| c.innovation);
    let (mut excess, mut disjoint, mut matching) = (0usize, 0usize, 0usize);
    let mut weight_diff = 0.0;
    while i < ca.len() || j < cb.len() {
        match (ca.get(i), cb.get(j)) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                matching += 1;
                weight_diff += (x.weight - y.weight).abs();
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.innovation < y.innovation => {
                disjoint += 1;
                let _ = y;
                i += 1;
            }
            (Some(_), Some(_)) => {
                disjoint += 1;
                j += 1;
            }
            (Some(x), None) => {
                if x.innovation > max_b { excess += 1 } else { disjoint += 1 }
                i += 1;
            }
            (None, Some(y)) => {
                if y.innovation > max_a { excess += 1 } else { disjoint += 1 }
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    let n = ca.len().max(cb.len()).max(1) as f64;
    let mean_weight_diff = if matching > 0 { weight_diff / matching as f64 } else { 0.0 };
    config.c_excess * excess as f64 / n
        + config.c_disjoint * disjoint as f64 / n
        + config.c_weight * mean_weight_diff
}

/// Historical-marking crossover. Matching genes are chosen randomly from
/// either parent; disjoint and excess genes are inherited from the
/// higher-scoring parent (ties favour `a`), as are the node genes.
pub fn crossover(
    a: &Genome,
    a_score: f64,
    b: &Genome,
    b_score: f64,
    rng: &mut impl Rng,
) -> Genome {
    let (fitter, weaker) = if b_score > a_score { (b, a) } else { (a, b) };
    let mut connections = Vec::with_capacity(fitter.connections.len());
    let mut j = 0;
    for gene in &fitter.connections {
        while j < weaker.connections.len()
            && weaker.connections[j].innovation < gene.innovation
        {
            j += 1;
        }
        let matched = weaker
            .connections
            .get(j)
            .filter(|w| w.innovation == gene.innovation);
        let chosen = match matched {
            Some(w) if rng.random::<bool>() => *w,
            _ => *gene,
        };
        connections.push(chosen);
    }
    Genome { nodes: fitter.nodes.clone(), connections }
}

/// Complexifying mutation: per-connection weight perturbation or reset,
/// add-connection (recurrent and self-loops allowed) and add-node (split an
/// enabled connection, disabling the original).
pub fn mutate(
    genome: &mut Genome,
    tracker: &mut InnovationTracker,
    config: &EvolutionConfig,
    rng: &mut impl Rng,
) {
    for c in &mut genome.connections {
        if rng.random::<f64>() < config.weight_mutate_prob {
            if rng.random::<f64>() < config.weight_reset_prob {
                c.weight =
                    rng.random_range(-config.weight_reset_range..=config.weight_reset_range);
            } else {
                c.weight +=
                    rng.random_range(-config.weight_perturb_range..=config.weight_perturb_range);
            }
        }
    }

    if rng.random::<f64>() < config.add_connection_prob {
        // A few attempts to find an unused (source, target) pair.
        let non_inputs: Vec<u32> = genome
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Input)
            .map(|n| n.id)
            .collect();
        for _ in 0..20 {
            let source = genome.nodes[rng.random_range(0..genome.nodes.len())].id;
            let target = non_inputs[rng.random_range(0..non_inputs.len())];
            if !genome.has_connection(source, target) {
                let innovation = tracker.connection(source, target);
                genome.connections.push(ConnectionGene {
                    innovation,
                    source,
                    target,
                    weight: rng
                        .random_range(-config.initial_weight_range..=config.initial_weight_range),
                    enabled: true,
                });
                break;
            }
        }
    }

    if rng.random::<f64>() < config.add_node_prob {
        let enabled: Vec<usize> = genome
            .connections
            .iter()
            .enumerate()
            .filter(|(_, c)| c.enabled)
            .map(|(i, _)| i)
            .collect();
        if !enabled.is_empty() {
            let idx = enabled[rng.random_range(0..enabled.len())];
            let split = tracker.split(genome.connections[idx].innovation);
            // The same split may already be present if this genome mutated an
            // identical structure earlier in the generation via the cache.
            if genome.node_index(split.node_id).is_none() {
                let old = genome.connections[idx];
                genome.connections[idx].enabled = false;
                genome.nodes.push(NodeGene { id: split.node_id, kind: NodeKind::Hidden });
                genome.connections.push(ConnectionGene {
                    innovation: split.incoming,
                    source: old.source,
                    target: split.node_id,
                    weight: 1.0,
                    enabled: true,
                });
                genome.connections.push(ConnectionGene {
                    innovation: split.outgoing,
                    source: split.node_id,
                    target: old.target,
                    weight: old.weight,
                    enabled: true,
                });
            }
        }
    }

    genome.sort();
}

/// One NEAT species.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Species {
    pub representative: Genome,
    /// Indices into the current population; rebuilt every generation.
    pub members: Vec<usize>,
    pub staleness: u32,
    pub best_score: f64,
}

/// Generational NEAT reproducer. Holds the species list, the innovation
/// tracker and the adaptive compatibility threshold across generations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Neat {
    config: EvolutionConfig,
    species: Vec<Species>,
    tracker: InnovationTracker,
    threshold: f64,
    generation: u32,
}

impl Neat {
    pub fn new(config: EvolutionConfig, n_in: u32, n_out: u32) -> Neat {
        Neat {
            threshold: config.compatibility_threshold,
            config,
            species: Vec::new(),
            tracker: InnovationTracker::new(n_in, n_out),
            generation: 0,
        }
    }

    /// Initial population of fully connected genomes.
    pub fn initial_population(&self, n_in: u32, n_out: u32, rng: &mut impl Rng) -> Vec<Genome> {
        (0..self.config.population_size)
            .map(|_| Genome::initial(n_in, n_out, self.config.initial_weight_range, rng))
            .collect()
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// Assign every member of `population` to a species. Returns the species
    /// index of each member.
    fn speciate(&mut self, population: &[Genome]) -> Vec<usize> {
        for s in &mut self.species {
            s.members.clear();
        }
        for (i, genome) in population.iter().enumerate() {
            let found = self.species.iter().position(|s| {
                compatibility_distance(genome, &s.representative, &self.config) < self.threshold
            });
            let idx = match found {
                Some(idx) => idx,
                None => {
                    self.species.push(Species {
                        representative: genome.clone(),
                        members: Vec::new(),
                        staleness: 0,
                        best_score: f64::NEG_INFINITY,
                    });
                    self.species.len() - 1
                }
            };
            self.species[idx].members.push(i);
        }
        self.species.retain(|s| !s.members.is_empty());
        // Representatives for the next generation come from this generation's
        // members.
        for s in &mut self.species {
            s.representative = population[s.members[0]].clone();
        }
        let mut assignment = vec![0usize; population.len()];
        for (si, s) in self.species.iter().enumerate() {
            for &m in &s.members {
                assignment[m] = si;
            }
        }
        assignment
    }

    /// Produce the next generation from `population` scored by `scores`.
    ///
    /// Speciates by compatibility threshold, shares scores within species,
    /// allocates offspring proportional to total adjusted score, copies the
    /// champion of every species with more than `champion_species_size`
    /// members unchanged, and fills the rest with crossover (probability
    /// `crossover_rate`) or mutated clones.
    pub fn epoch(
        &mut self,
        population: &[Genome],
        scores: &[f64],
        rng: &mut impl Rng,
    ) -> Vec<Genome> {
        assert_eq!(population.len(), scores.len(), "one score per genome");
        let pop_size = self.config.population_size;
        self.tracker.begin_generation();
        self.speciate(population);

        // Adaptive threshold for the next generation.
        if self.species.len() > self.config.species_target_max {
            self.threshold += self.config.threshold_step;
        } else if self.species.len() < self.config.species_target_min {
            self.threshold = (self.threshold - self.config.threshold_step).max(0.3);
        }

        // Staleness bookkeeping on raw scores.
        for s in &mut self.species {
            let best = s.members.iter().map(|&m| scores[m]).fold(f64::NEG_INFINITY, f64::max);
            if best > s.best_score {
                s.best_score = best;
                s.staleness = 0;
            } else {
                s.staleness += 1;
            }
        }

        let champion = (0..population.len())
            .max_by(|&x, &y| scores[x].total_cmp(&scores[y]))
            .expect("non-empty population");

        // Fitness sharing: the species' reproductive weight is the sum of
        // member scores divided by species size.
        let shared: Vec<f64> = self
            .species
            .iter()
            .map(|s| {
                let sum: f64 = s.members.iter().map(|&m| scores[m]).sum();
                sum / s.members.len() as f64
            })
            .collect();

        let mut eligible: Vec<bool> = self
            .species
            .iter()
            .map(|s| {
                s.staleness <= self.config.staleness_limit || s.members.contains(&champion)
            })
            .collect();
        if !eligible.iter().any(|&e| e) {
            eligible.iter_mut().for_each(|e| *e = true);
        }

        let allocation = self.allocate(&shared, &eligible, pop_size);

        let mut next = Vec::with_capacity(pop_size);
        for (si, &count) in allocation.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let members = &self.species[si].members;
            let mut by_score: Vec<usize> = members.clone();
            by_score.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]));
            let survivors =
                &by_score[..((by_score.len() as f64 * self.config.survival_rate).ceil() as usize)
                    .clamp(1, by_score.len())];

            let mut remaining = count;
            if members.len() > self.config.champion_species_size {
                next.push(population[by_score[0]].clone());
                remaining -= 1;
            }
            for _ in 0..remaining {
                let offspring = if rng.random::<f64>() < self.config.crossover_rate
                    && survivors.len() >= 2
                {
                    let i = survivors[rng.random_range(0..survivors.len())];
                    let mut j = survivors[rng.random_range(0..survivors.len())];
                    while j == i {
                        j = survivors[rng.random_range(0..survivors.len())];
                    }
                    crossover(&population[i], scores[i], &population[j], scores[j], rng)
                } else {
                    let i = survivors[rng.random_range(0..survivors.len())];
                    let mut clone = population[i].clone();
                    mutate(&mut clone, &mut self.tracker, &self.config, rng);
                    clone
                };
                next.push(offspring);
            }
        }
        debug_assert_eq!(next.len(), pop_size);
        self.generation += 1;
        next
    }

    /// Largest-remainder allocation of `total` offspring over species,
    /// proportional to the shared scores of eligible species. A uniform
    /// fallback applies when every shared score is zero. Species large enough
    /// to carry a champion are guaranteed at least one slot.
    fn allocate(&self, shared: &[f64], eligible: &[bool], total: usize) -> Vec<usize> {
        let weights: Vec<f64> = shared
            .iter()
            .zip(eligible)
            .map(|(&w, &e)| if e { w } else { 0.0 })
            .collect();
        let sum: f64 = weights.iter().sum();
        let quotas: Vec<f64> = if sum > 0.0 {
            weights.iter().map(|w| total as f64 * w / sum).collect()
        } else {
            // All-zero scores: uniform allocation over eligible species.
            let n = eligible.iter().filter(|&&e| e).count().max(1);
            eligible
                .iter()
                .map(|&e| if e { total as f64 / n as f64 } else { 0.0 })
                .collect()
        };
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut rest: usize = total.saturating_sub(counts.iter().sum());
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&x, &y| {
            (quotas[y] - quotas[y].floor()).total_cmp(&(quotas[x] - quotas[x].floor()))
        });
        let mut k = 0;
        while rest > 0 {
            let i = order[k % order.len()];
            if eligible[i] {
                counts[i] += 1;
                rest -= 1;
            }
            k += 1;
        }
        // Champion-preserving floor for big species.
        for si in 0..counts.len() {
            if counts[si] == 0
                && eligible[si]
                && self.species[si].members.len() > self.config.champion_species_size
            {
                if let Some(donor) = (0..counts.len()).max_by_key(|&j| counts[j]) {
                    if counts[donor] > 1 {
                        counts[donor] -= 1;
                        counts[si] += 1;
                    }
                }
            }
        }
        counts
    }
}
