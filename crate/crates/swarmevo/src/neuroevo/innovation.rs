use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Innovation numbers handed out for a node-split mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitInnovation {
    pub node_id: u32,
    pub incoming: u32,
    pub outgoing: u32,
}

/// Hands out globally unique historical markings. Identical structural
/// mutations within one generation receive the same markings; the caches are
/// cleared at every generation boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnovationTracker {
    next_innovation: u32,
    next_node_id: u32,
    #[serde(skip)]
    connection_cache: HashMap<(u32, u32), u32>,
    #[serde(skip)]
    split_cache: HashMap<u32, SplitInnovation>,
}

impl InnovationTracker {
    /// Tracker positioned after the markings used by `Genome::initial`.
    pub fn new(n_in: u32, n_out: u32) -> Self {
        Self {
            next_innovation: n_in * n_out,
            next_node_id: n_in + n_out,
            connection_cache: HashMap::new(),
            split_cache: HashMap::new(),
        }
    }

    pub fn begin_generation(&mut self) {
        self.connection_cache.clear();
        self.split_cache.clear();
    }

    /// Marking for a new `source -> target` connection.
    pub fn connection(&mut self, source: u32, target: u32) -> u32 {
        if let Some(&innov) = self.connection_cache.get(&(source, target)) {
            return innov;
        }
        let innov = self.next_innovation;
        self.next_innovation += 1;
        self.connection_cache.insert((source, target), innov);
        innov
    }

    /// Markings for splitting the connection with the given innovation number.
    pub fn split(&mut self, connection_innovation: u32) -> SplitInnovation {
        if let Some(&split) = self.split_cache.get(&connection_innovation) {
            return split;
        }
        let split = SplitInnovation {
            node_id: self.next_node_id,
            incoming: self.next_innovation,
            outgoing: self.next_innovation + 1,
        };
        self.next_node_id += 1;
        self.next_innovation += 2;
        self.split_cache.insert(connection_innovation, split);
        split
    }
}
