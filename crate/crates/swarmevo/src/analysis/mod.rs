//! Post-hoc analysis: champion post-evaluation, highest-so-far fitness
//! trajectories, behaviour-space maps and densities, and network complexity
//! statistics.

mod som;

pub use som::{map_behaviours, train_som, CellSummary, SomConfig, SomGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuroevo::Genome;
use crate::seeds;
use crate::tasks::{evaluate, TaskConfig};

/// Compact per-individual record kept for complexity statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndividualRecord {
    pub fitness: f64,
    pub complexity: usize,
}

/// One generation of one evolutionary run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub species: usize,
    pub archive_size: usize,
    /// Minimal criterion after this generation's update, PMCNS only.
    pub mc: Option<f64>,
    /// Population index of the generation champion.
    pub champion: usize,
    pub individuals: Vec<IndividualRecord>,
}

/// Re-evaluate a genome over `n` fresh evaluations (each the configured
/// number of trials) and return the mean combined fitness.
pub fn post_evaluate(
    genome: &Genome,
    config: &TaskConfig,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("post-evaluation needs n >= 1".into()));
    }
    let mut sum = 0.0;
    for k in 0..n {
        let trial_seeds: Vec<u64> = (0..config.trials)
            .map(|t| seeds::mix(&[seed, 4, k as u64, t as u64]))
            .collect();
        sum += evaluate(genome, config, &trial_seeds)?.fitness;
    }
    Ok(sum / n as f64)
}

/// The trial seeds `post_evaluate` uses for its `k`-th evaluation.
pub fn post_evaluation_seeds(seed: u64, k: usize, trials: usize) -> Vec<u64> {
    (0..trials)
        .map(|t| seeds::mix(&[seed, 4, k as u64, t as u64]))
        .collect()
}

/// Highest-so-far best fitness per generation, averaged across runs. All
/// runs must cover the same number of generations.
pub fn fitness_trajectory(runs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = runs.first() else {
        return Err(Error::Config("fitness trajectory needs at least one run".into()));
    };
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(Error::Config("runs cover different generation counts".into()));
    }
    let generations = first.len();
    let mut curve = vec![0.0; generations];
    for run in runs {
        let mut best = f64::NEG_INFINITY;
        for (g, &f) in run.iter().enumerate() {
            best = best.max(f);
            curve[g] += best;
        }
    }
    for c in &mut curve {
        *c /= runs.len() as f64;
    }
    Ok(curve)
}

/// Running maximum of one run's best-fitness series.
pub fn running_max(series: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    series
        .iter()
        .map(|&f| {
            best = best.max(f);
            best
        })
        .collect()
}

/// 2D histogram of two descriptor components over [0,1] x [0,1], row-major
/// with `bins` cells per axis. Values at 1.0 fall in the last bin.
pub fn density_2d(
    descriptors: &[Vec<f64>],
    components: (usize, usize),
    bins: usize,
) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::Config("density histogram needs bins >= 1".into()));
    }
    let mut grid = vec![0usize; bins * bins];
    for d in descriptors {
        let (i, j) = components;
        if i >= d.len() || j >= d.len() {
            return Err(Error::Config(format!(
                "density components ({i}, {j}) out of range for descriptor length {}",
                d.len()
            )));
        }
        let bin = |v: f64| -> usize {
            ((v * bins as f64) as usize).min(bins - 1)
        };
        grid[bin(d[j]) * bins + bin(d[i])] += 1;
    }
    Ok(grid)
}

/// One fitness level of the complexity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub level: f64,
    /// Mean over qualifying runs of the minimum complexity reaching the level.
    pub mean_complexity: f64,
    /// Mean generation at which that least-complex individual first appeared.
    pub mean_generation: f64,
    /// Runs with at least one qualifying individual.
    pub qualifying_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTable {
    pub rows: Vec<ComplexityRow>,
    pub total_runs: usize,
}

/// Least-complexity-to-reach-fitness statistics over all evaluated
/// individuals of each run, per ascending fitness level.
pub fn complexity_table(
    runs: &[Vec<GenerationRecord>],
    levels: &[f64],
) -> Result<ComplexityTable> {
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("fitness levels must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut complexity_sum = 0.0;
        let mut generation_sum = 0.0;
        let mut qualifying_runs = 0;
        for run in runs {
            // Minimum complexity among individuals with fitness >= level,
            // and the first generation where that complexity qualifies.
            let mut best: Option<(usize, u32)> = None;
            for record in run {
                for ind in &record.individuals {
                    if ind.fitness >= level
                        && best.is_none_or(|(c, _)| ind.complexity < c)
                    {
                        best = Some((ind.complexity, record.generation));
                    }
                }
            }
            if let Some((complexity, generation)) = best {
                qualifying_runs += 1;
                complexity_sum += complexity as f64;
                generation_sum += generation as f64;
            }
        }
        rows.push(ComplexityRow {
            level,
            mean_complexity: if qualifying_runs > 0 {
                complexity_sum / qualifying_runs as f64
            } else {
                f64::NAN
            },
            mean_generation: if qualifying_runs > 0 {
                generation_sum / qualifying_runs as f64
            } else {
                f64::NAN
            },
            qualifying_runs,
        });
    }
    Ok(ComplexityTable { rows, total_runs: runs.len() })
}
