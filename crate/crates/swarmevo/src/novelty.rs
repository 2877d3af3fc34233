//! Behaviour archive and novelty scoring via k-nearest-neighbour sparseness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NoveltyConfig {
    /// Number of nearest neighbours averaged by the sparseness measure.
    pub k: usize,
    /// Probability that an evaluated descriptor is added to the archive.
    pub p_add: f64,
    /// Optional archive size cap; oldest entries are dropped first.
    pub capacity: Option<usize>,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self { k: 15, p_add: 0.02, capacity: None }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("novelty k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_add) {
            return Err(Error::Config(format!(
                "novelty p_add must be in [0,1], got {}",
                self.p_add
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub generation: u32,
    pub descriptor: Vec<f64>,
}

/// Append-only store of previously seen behaviour descriptors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new() -> Archive {
        Archive::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    fn push(&mut self, generation: u32, descriptor: Vec<f64>, capacity: Option<usize>) {
        self.entries.push(ArchiveEntry { generation, descriptor });
        if let Some(cap) = capacity {
            while self.entries.len() > cap {
                self.entries.remove(0);
            }
        }
    }

    /// One descriptor per line: generation of insertion, then the
    /// comma-separated elements.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for entry in &self.entries {
            write!(w, "{}", entry.generation)?;
            for v in &entry.descriptor {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Euclidean distance between two descriptors.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Config(format!(
            "descriptor length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(euclid(a, b))
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean distance from `x` to its `k` nearest neighbours among `reference`.
/// With fewer than `k` references the mean runs over all of them; an empty
/// reference set scores 0.
pub fn sparseness<'a, I>(x: &[f64], reference: I, k: usize) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut distances: Vec<f64> = reference.into_iter().map(|r| euclid(x, r)).collect();
    if distances.is_empty() {
        return 0.0;
    }
    let k = k.min(distances.len());
    if k < distances.len() {
        distances.select_nth_unstable_by(k - 1, f64::total_cmp);
        distances.truncate(k);
    }
    distances.iter().sum::<f64>() / k as f64
}

/// Score a generation's descriptors against the other population members and
/// the archive, then stochastically insert each descriptor into the archive.
pub fn score_generation(
    descriptors: &[Vec<f64>],
    archive: &mut Archive,
    config: &NoveltyConfig,
    generation: u32,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let scores = descriptors
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let others = descriptors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.as_slice());
            let archived = archive.entries.iter().map(|e| e.descriptor.as_slice());
            sparseness(d, others.chain(archived), config.k)
        })
        .collect();
    for d in descriptors {
        if rng.random::<f64>() < config.p_add {
            archive.push(generation, d.clone(), config.capacity);
        }
    }
    scores
}
