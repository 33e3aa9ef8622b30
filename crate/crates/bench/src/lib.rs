//! Shared inputs for the criterion benches.

use boardsense_core::simulation::{generate_samples, GameGenConfig, NoiseModel, Observation};
use boardsense_core::BoardState;

/// `count` (previous state, observation) pairs from the default noise model.
pub fn sample_pairs(count: usize, seed: u64) -> Vec<(BoardState, Observation)> {
    let cfg = GameGenConfig {
        seed,
        ..GameGenConfig::default()
    };
    let noise = NoiseModel {
        seed,
        ..NoiseModel::default()
    };
    generate_samples(&cfg, &noise, count)
        .expect("default configs are valid")
        .iter()
        .flat_map(|g| {
            g.samples()
                .map(|s| (*s.prev, s.observation.clone()))
                .collect::<Vec<_>>()
        })
        .take(count)
        .collect()
}
