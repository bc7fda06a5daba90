//! Synthetic instance generation, trace ingestion and weight assignment.

mod synthetic;
mod trace;

pub use synthetic::{generate, SyntheticConfig, WorkloadKind};
pub use trace::{ingest_trace, parse_trace, read_trace, ReleaseMode, TraceRecord, TRACE_CAPACITY};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::CoflowInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Unit,
    /// Independent draws from `(0, 1]`.
    UniformRandom(u64),
}

/// Replaces every weight according to `mode`.
pub fn assign_weights(instance: &CoflowInstance, mode: WeightMode) -> Result<CoflowInstance> {
    let weights: Vec<f64> = match mode {
        WeightMode::Unit => vec![1.0; instance.len()],
        WeightMode::UniformRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..instance.len())
                .map(|_| 1.0 - rng.gen::<f64>())
                .collect()
        }
    };
    instance.with_weights(&weights)
}
