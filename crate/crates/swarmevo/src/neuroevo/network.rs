use crate::error::{Error, Result};

use super::genome::{Genome, NodeKind};

/// Steepened logistic sigmoid used throughout NEAT.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-4.9 * x).exp())
}

/// A genome compiled into a flat phenotype for fast activation.
///
/// Nodes are indexed in genome order (sorted by id, so inputs come first).
/// Each non-input node has a slice of incoming `(source index, weight)` edges
/// taken from the enabled connections.
#[derive(Debug, Clone)]
pub struct Network {
    num_inputs: usize,
    num_nodes: usize,
    /// Offsets into `edges` for each non-input node, length `non_inputs + 1`.
    offsets: Vec<u32>,
    edges: Vec<(u32, f64)>,
    outputs: Vec<u32>,
}

impl Network {
    pub fn compile(genome: &Genome) -> Network {
        let num_nodes = genome.nodes.len();
        let num_inputs = genome.input_count();
        let non_inputs = num_nodes - num_inputs;

        // Enabled incoming edges grouped per non-input node.
        let mut incoming: Vec<Vec<(u32, f64)>> = vec![Vec::new(); non_inputs];
        for c in genome.connections.iter().filter(|c| c.enabled) {
            let src = genome.node_index(c.source).expect("valid genome") as u32;
            let dst = genome.node_index(c.target).expect("valid genome");
            debug_assert!(dst >= num_inputs, "input nodes have no incoming edges");
            incoming[dst - num_inputs].push((src, c.weight));
        }

        let mut offsets = Vec::with_capacity(non_inputs + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for list in incoming {
            edges.extend(list);
            offsets.push(edges.len() as u32);
        }

        let outputs = genome
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Output)
            .map(|(i, _)| i as u32)
            .collect();

        Network { num_inputs, num_nodes, offsets, edges, outputs }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn new_state(&self) -> NetworkState {
        NetworkState {
            current: vec![0.0; self.num_nodes],
            next: vec![0.0; self.num_nodes],
        }
    }

    /// One synchronous propagation step. Each non-input node's new activation
    /// is `sigmoid(sum of weight * source activation)` where input sources are
    /// read directly from `inputs` and all other sources from the previous
    /// tick's activations.
    pub fn activate_into(
        &self,
        state: &mut NetworkState,
        inputs: &[f64],
        outputs: &mut [f64],
    ) -> Result<()> {
        if inputs.len() != self.num_inputs {
            return Err(Error::Config(format!(
                "expected {} inputs, got {}",
                self.num_inputs,
                inputs.len()
            )));
        }
        if outputs.len() != self.outputs.len() {
            return Err(Error::Config(format!(
                "expected {} output slots, got {}",
                self.outputs.len(),
                outputs.len()
            )));
        }
        state.current[..self.num_inputs].copy_from_slice(inputs);
        for node in 0..self.num_nodes - self.num_inputs {
            let lo = self.offsets[node] as usize;
            let hi = self.offsets[node + 1] as usize;
            let mut sum = 0.0;
            for &(src, w) in &self.edges[lo..hi] {
                sum += w * state.current[src as usize];
            }
            state.next[self.num_inputs + node] = sigmoid(sum);
        }
        state.next[..self.num_inputs].copy_from_slice(inputs);
        std::mem::swap(&mut state.current, &mut state.next);
        for (slot, &idx) in outputs.iter_mut().zip(&self.outputs) {
            *slot = state.current[idx as usize];
        }
        Ok(())
    }

    /// Convenience wrapper returning a fresh output vector.
    pub fn activate(&self, state: &mut NetworkState, inputs: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs.len()];
        self.activate_into(state, inputs, &mut out)?;
        Ok(out)
    }
}

/// Per-node activations carried across ticks within one trial.
#[derive(Debug, Clone)]
pub struct NetworkState {
    current: Vec<f64>,
    next: Vec<f64>,
}

impl NetworkState {
    /// Reset to the start-of-trial state (all activations zero).
    pub fn reset(&mut self) {
        self.current.fill(0.0);
        self.next.fill(0.0);
    }
}
