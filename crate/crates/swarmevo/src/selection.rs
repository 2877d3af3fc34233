//! Selection regimes: fitness, random, pure novelty, progressive minimal
//! criteria novelty search (PMCNS) and linear scalarization of novelty and
//! fitness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How per-generation (fitness, novelty) pairs become selection scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum SelectionPolicy {
    Fitness,
    Random,
    Novelty,
    Pmcns {
        /// Percentile of population fitness feeding the criterion update.
        p: f64,
        /// Smoothing factor of the criterion update.
        s: f64,
    },
    Scalarization {
        /// Weight of the novelty component.
        rho: f64,
    },
}

impl SelectionPolicy {
    /// Whether this policy needs novelty scores at all.
    pub fn uses_novelty(&self) -> bool {
        !matches!(self, SelectionPolicy::Fitness | SelectionPolicy::Random)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionPolicy::Pmcns { p, s } => {
                if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&s) {
                    return Err(Error::Config(format!(
                        "pmcns parameters must be in [0,1], got p={p} s={s}"
                    )));
                }
            }
            SelectionPolicy::Scalarization { rho } => {
                if !(0.0..=1.0).contains(&rho) {
                    return Err(Error::Config(format!(
                        "scalarization rho must be in [0,1], got {rho}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// The progressively rising minimal criterion.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PmcnsState {
    pub mc: f64,
}

/// Fitness-based selection: the identity mapping.
pub fn score_fitness(fitnesses: &[f64]) -> Vec<f64> {
    fitnesses.to_vec()
}

/// Random selection: independent uniform draws in [0, 1).
pub fn score_random(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Nearest-rank percentile: the `ceil(p * n)`-th order statistic (at least
/// the first).
fn nearest_rank_percentile(values: &[f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Raise the minimal criterion towards the `p`-th percentile of the current
/// population fitness: `mc <- mc + max(0, (v - mc) * s)`. Returns the new mc.
pub fn update_criterion(state: &mut PmcnsState, fitnesses: &[f64], p: f64, s: f64) -> f64 {
    let v = nearest_rank_percentile(fitnesses, p);
    state.mc += ((v - state.mc) * s).max(0.0);
    state.mc
}

/// PMCNS gate: novelty for individuals whose fitness meets the criterion,
/// zero otherwise.
pub fn score_pmcns(fitnesses: &[f64], novelties: &[f64], mc: f64) -> Vec<f64> {
    assert_eq!(fitnesses.len(), novelties.len());
    fitnesses
        .iter()
        .zip(novelties)
        .map(|(&fit, &nov)| if fit >= mc { nov } else { 0.0 })
        .collect()
}

fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        values.iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        // Degenerate population: defined as 0.5 for everyone.
        vec![0.5; values.len()]
    }
}

/// Linear scalarization: min-max normalize fitness and novelty over the
/// population, then blend with weight `rho` on novelty.
pub fn score_scalarized(fitnesses: &[f64], novelties: &[f64], rho: f64) -> Vec<f64> {
    assert_eq!(fitnesses.len(), novelties.len());
    assert!(!fitnesses.is_empty());
    let fit = min_max_normalize(fitnesses);
    let nov = min_max_normalize(novelties);
    fit.iter().zip(&nov).map(|(f, n)| (1.0 - rho) * f + rho * n).collect()
}
