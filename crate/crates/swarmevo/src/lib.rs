//! Evolution of neural controllers for simulated robot swarms.
//!
//! The crate combines a minimal NEAT implementation with novelty search and
//! several selection regimes (fitness, random, pure novelty, progressive
//! minimal criteria, linear scalarization), a deterministic 2D kinematic
//! swarm simulator with two tasks (aggregation and resource sharing), and
//! post-hoc analysis tools (fitness trajectories, Kohonen maps, behaviour
//! density histograms, network complexity tables).

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod neuroevo;
pub mod novelty;
pub mod seeds;
pub mod selection;
pub mod sim;
pub mod tasks;

pub use error::{Error, Result};
