//! Deterministic seed derivation.
//!
//! All randomness in an experiment is derived from a single master seed by
//! mixing in structural indices (run, generation, trial, stream tag), so the
//! scheduling order of parallel work never affects results.

/// splitmix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a sequence of integers into a single seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x51_7c_c1_b7_27_22_0a_95u64;
    for &p in parts {
        acc = splitmix(acc ^ p);
    }
    acc
}

/// Seed for run `r` of an experiment.
pub fn run_seed(master: u64, run: usize) -> u64 {
    mix(&[master, 1, run as u64])
}

/// Trial seed shared by the whole population in one generation.
pub fn trial_seed(run_seed: u64, generation: u32, trial: usize) -> u64 {
    mix(&[run_seed, 2, generation as u64, trial as u64])
}

/// Seed for one of a run's named rng streams.
pub fn stream_seed(run_seed: u64, tag: u64) -> u64 {
    mix(&[run_seed, 3, tag])
}
