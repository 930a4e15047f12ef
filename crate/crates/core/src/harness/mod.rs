//! Experiment configuration, orchestration and reporting behind the `rpnn` CLI.

pub mod compare;
pub mod config;
pub mod experiment;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use compare::{emit_comparison, ComparisonTable, LITERATURE};
pub use config::ExperimentConfig;
pub use experiment::{prepare_data, run_experiment, seed_wins, ExperimentReport, PreparedData};

use crate::dataset::Pattern;
use crate::error::Result;
use crate::network::{FeedbackMode, InitRange, RidgePolyNet};

/// Random patterns with inputs and targets in the scaled range `[0.2, 0.8]`,
/// used to exercise the sensitivity recursion away from any real data.
pub fn synthetic_sequence(m_external: usize, steps: usize, seed: u64) -> Vec<Pattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|t| Pattern {
            inputs: (0..m_external)
                .map(|_| rng.random_range(0.2..=0.8))
                .collect(),
            target: rng.random_range(0.2..=0.8),
            t_index: t,
        })
        .collect()
}

/// Random network with blocks `1..=order`, all but the last frozen.
pub fn random_network(
    mode: FeedbackMode,
    m_external: usize,
    order: usize,
    init: InitRange,
    seed: u64,
) -> Result<RidgePolyNet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = RidgePolyNet::new(mode, m_external, init, &mut rng)?;
    for _ in 1..order {
        net.add_block(order, init, &mut rng)?;
    }
    Ok(net)
}
