use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Output,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u32,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u32,
    pub source: u32,
    pub target: u32,
    pub weight: f64,
    pub enabled: bool,
}

/// A NEAT genome. Nodes are kept sorted by id and connections by innovation
/// number; both lists are free of duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
}

impl Genome {
    /// Fully connected input-to-output genome with no hidden nodes and no
    /// bias node. Input ids are `0..n_in`, output ids `n_in..n_in + n_out`,
    /// and innovation numbers are assigned row by row per output so that all
    /// initial genomes share the same historical markings.
    pub fn initial(n_in: u32, n_out: u32, weight_range: f64, rng: &mut impl Rng) -> Genome {
        let mut nodes = Vec::with_capacity((n_in + n_out) as usize);
        for id in 0..n_in {
            nodes.push(NodeGene { id, kind: NodeKind::Input });
        }
        for id in n_in..n_in + n_out {
            nodes.push(NodeGene { id, kind: NodeKind::Output });
        }
        let mut connections = Vec::with_capacity((n_in * n_out) as usize);
        let mut innovation = 0;
        for out in 0..n_out {
            for inp in 0..n_in {
                connections.push(ConnectionGene {
                    innovation,
                    source: inp,
                    target: n_in + out,
                    weight: rng.random_range(-weight_range..=weight_range),
                    enabled: true,
                });
                innovation += 1;
            }
        }
        Genome { nodes, connections }
    }

    /// Number of nodes plus number of connections.
    pub fn complexity(&self) -> usize {
        self.nodes.len() + self.connections.len()
    }

    pub fn input_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Input).count()
    }

    pub fn output_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Output).count()
    }

    /// Index of a node id in the sorted node list.
    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn has_connection(&self, source: u32, target: u32) -> bool {
        self.connections.iter().any(|c| c.source == source && c.target == target)
    }

    pub fn sort(&mut self) {
        self.nodes.sort_by_key(|n| n.id);
        self.connections.sort_by_key(|c| c.innovation);
    }

    /// Line-oriented text form: node lines first, then connection lines.
    ///
    /// ```text
    /// node <id> <input|output|hidden>
    /// conn <innovation> <source> <target> <weight> <0|1>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let kind = match n.kind {
                NodeKind::Input => "input",
                NodeKind::Output => "output",
                NodeKind::Hidden => "hidden",
            };
            writeln!(out, "node {} {}", n.id, kind).unwrap();
        }
        for c in &self.connections {
            writeln!(
                out,
                "conn {} {} {} {:?} {}",
                c.innovation,
                c.source,
                c.target,
                c.weight,
                u8::from(c.enabled)
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Genome> {
        let mut genome = Genome { nodes: Vec::new(), connections: Vec::new() };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| {
                Error::Config(format!("genome line {}: {}", lineno + 1, what))
            };
            match fields.first().copied() {
                Some("node") if fields.len() == 3 => {
                    let id = fields[1].parse().map_err(|_| bad("invalid node id"))?;
                    let kind = match fields[2] {
                        "input" => NodeKind::Input,
                        "output" => NodeKind::Output,
                        "hidden" => NodeKind::Hidden,
                        _ => return Err(bad("unknown node kind")),
                    };
                    genome.nodes.push(NodeGene { id, kind });
                }
                Some("conn") if fields.len() == 6 => {
                    genome.connections.push(ConnectionGene {
                        innovation: fields[1].parse().map_err(|_| bad("invalid innovation"))?,
                        source: fields[2].parse().map_err(|_| bad("invalid source"))?,
                        target: fields[3].parse().map_err(|_| bad("invalid target"))?,
                        weight: fields[4].parse().map_err(|_| bad("invalid weight"))?,
                        enabled: match fields[5] {
                            "0" => false,
                            "1" => true,
                            _ => return Err(bad("invalid enabled flag")),
                        },
                    });
                }
                _ => return Err(bad("unrecognized line")),
            }
        }
        genome.sort();
        genome.check()?;
        Ok(genome)
    }

    /// Structural validity: unique ids and innovations, endpoints present,
    /// no duplicate (source, target) pairs.
    pub fn check(&self) -> Result<()> {
        for w in self.nodes.windows(2) {
            if w[0].id >= w[1].id {
                return Err(Error::Config(format!("duplicate node id {}", w[1].id)));
            }
        }
        for w in self.connections.windows(2) {
            if w[0].innovation >= w[1].innovation {
                return Err(Error::Config(format!(
                    "duplicate innovation {}",
                    w[1].innovation
                )));
            }
        }
        let mut pairs: Vec<(u32, u32)> =
            self.connections.iter().map(|c| (c.source, c.target)).collect();
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Config(format!(
                    "duplicate connection {} -> {}",
                    w[0].0, w[0].1
                )));
            }
        }
        for c in &self.connections {
            if self.node_index(c.source).is_none() || self.node_index(c.target).is_none() {
                return Err(Error::Config(format!(
                    "connection {} references missing node",
                    c.innovation
                )));
            }
        }
        Ok(())
    }
}
