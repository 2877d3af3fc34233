//! Kohonen self-organising map over behaviour descriptors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SomConfig {
    pub width: usize,
    pub height: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub final_learning_rate: f64,
    /// Initial neighbourhood radius; defaults to max(width, height) / 2.
    pub initial_radius: Option<f64>,
    pub final_radius: f64,
}

impl Default for SomConfig {
    fn default() -> Self {
        Self {
            width: 10,
            height: 10,
            epochs: 50,
            initial_learning_rate: 0.5,
            final_learning_rate: 0.01,
            initial_radius: None,
            final_radius: 1.0,
        }
    }
}

impl SomConfig {
    fn radius0(&self) -> f64 {
        self.initial_radius
            .unwrap_or(self.width.max(self.height) as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.epochs == 0 {
            return Err(Error::Config("SOM grid and epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Rectangular grid of prototype vectors, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SomGrid {
    pub width: usize,
    pub height: usize,
    pub prototypes: Vec<Vec<f64>>,
}

impl SomGrid {
    pub fn cell_position(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Index of the prototype nearest to `x` (first on ties).
    pub fn winner(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.prototypes.iter().enumerate() {
            let d = sq_dist(p, x);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Mean distance from each descriptor to its winning prototype.
    pub fn quantization_error(&self, descriptors: &[Vec<f64>]) -> f64 {
        if descriptors.is_empty() {
            return 0.0;
        }
        descriptors
            .iter()
            .map(|x| sq_dist(&self.prototypes[self.winner(x)], x).sqrt())
            .sum::<f64>()
            / descriptors.len() as f64
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Train a map on the descriptor set: prototypes initialized from random
/// data samples, then per-epoch winner search and Gaussian-neighbourhood
/// updates with linearly decaying learning rate and radius.
pub fn train_som(descriptors: &[Vec<f64>], config: &SomConfig, seed: u64) -> Result<SomGrid> {
    config.validate()?;
    if descriptors.is_empty() {
        return Err(Error::Config("cannot train a SOM on no descriptors".into()));
    }
    let dim = descriptors[0].len();
    if descriptors.iter().any(|d| d.len() != dim) {
        return Err(Error::Config("descriptors must share one length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = config.width * config.height;
    let mut grid = SomGrid {
        width: config.width,
        height: config.height,
        prototypes: (0..cells)
            .map(|_| descriptors[rng.random_range(0..descriptors.len())].clone())
            .collect(),
    };
    let mut order: Vec<usize> = (0..descriptors.len()).collect();
    let denom = (config.epochs - 1).max(1) as f64;
    for epoch in 0..config.epochs {
        let t = epoch as f64 / denom;
        let lr = config.initial_learning_rate
            + (config.final_learning_rate - config.initial_learning_rate) * t;
        let radius = config.radius0() + (config.final_radius - config.radius0()) * t;
        let two_r2 = 2.0 * radius * radius;
        order.shuffle(&mut rng);
        for &s in &order {
            let x = &descriptors[s];
            let win = grid.winner(x);
            let (wx, wy) = grid.cell_position(win);
            for (i, p) in grid.prototypes.iter_mut().enumerate() {
                let (cx, cy) = (i % config.width, i / config.width);
                let d2 = ((cx as f64 - wx as f64).powi(2))
                    + ((cy as f64 - wy as f64).powi(2));
                let h = (-d2 / two_r2).exp();
                if h < 1e-6 {
                    continue;
                }
                let step = lr * h;
                for (w, &v) in p.iter_mut().zip(x) {
                    *w += step * (v - *w);
                }
            }
        }
    }
    Ok(grid)
}

/// Per-cell occupancy and fitness summary of a descriptor set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub count: usize,
    pub mean_fitness: f64,
}

/// Assign each descriptor to its nearest prototype; returns one summary per
/// cell, row-major. `fitnesses` must parallel `descriptors`.
pub fn map_behaviours(
    grid: &SomGrid,
    descriptors: &[Vec<f64>],
    fitnesses: &[f64],
) -> Result<Vec<CellSummary>> {
    if descriptors.len() != fitnesses.len() {
        return Err(Error::Config(
            "map_behaviours needs one fitness per descriptor".into(),
        ));
    }
    let mut counts = vec![0usize; grid.prototypes.len()];
    let mut sums = vec![0.0; grid.prototypes.len()];
    for (d, &f) in descriptors.iter().zip(fitnesses) {
        let w = grid.winner(d);
        counts[w] += 1;
        sums[w] += f;
    }
    Ok(counts
        .into_iter()
        .zip(sums)
        .map(|(count, sum)| CellSummary {
            count,
            mean_fitness: if count > 0 { sum / count as f64 } else { 0.0 },
        })
        .collect())
}
