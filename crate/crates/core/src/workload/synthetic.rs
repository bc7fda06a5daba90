use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::model::{Coflow, CoflowInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadKind {
    /// Flow count uniform on `{N, ..., N^2}`.
    Dense,
    /// Fair coin between sparse (`{1, ..., N}` flows) and dense.
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_ports: usize,
    pub n_coflows: usize,
    pub kind: WorkloadKind,
    /// Inclusive range of integer flow sizes.
    pub size_range: (u32, u32),
    /// Inclusive range of inter-arrival gaps; `None` releases everything at 0.
    pub interarrival_range: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_ports: 16,
            n_coflows: 160,
            kind: WorkloadKind::Dense,
            size_range: (1, 100),
            interarrival_range: Some((1.0, 100.0)),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ports == 0 {
            return Err(argument("n_ports must be at least 1"));
        }
        let (lo, hi) = self.size_range;
        if lo == 0 || lo > hi {
            return Err(argument(format!(
                "size range {lo}..={hi} must be nonempty and positive"
            )));
        }
        if let Some((lo, hi)) = self.interarrival_range {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(argument(format!(
                    "inter-arrival range [{lo}, {hi}] is invalid"
                )));
            }
        }
        Ok(())
    }
}

/// Generates an instance. Coflow `k` draws everything from ChaCha8 stream `k`
/// of the seed: the dense/sparse coin (combined only), the flow count, the
/// port pairs (distinct, without replacement), the sizes, and finally its
/// inter-arrival gap. The first coflow is released at 0.
pub fn generate(config: &SyntheticConfig) -> Result<CoflowInstance> {
    config.validate()?;
    let n = config.n_ports;
    let mut release = 0.0;
    let mut coflows = Vec::with_capacity(config.n_coflows);
    for k in 0..config.n_coflows {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        let sparse = match config.kind {
            WorkloadKind::Dense => false,
            WorkloadKind::Combined => rng.gen_bool(0.5),
        };
        let m = if sparse {
            rng.gen_range(1..=n)
        } else {
            rng.gen_range(n..=n * n)
        };
        let pairs = sample(&mut rng, n * n, m);
        let (lo, hi) = config.size_range;
        let flows: Vec<(usize, usize, f64)> = pairs
            .into_iter()
            .map(|p| (p / n, p % n, rng.gen_range(lo..=hi) as f64))
            .collect();
        if let (Some((lo, hi)), true) = (config.interarrival_range, k > 0) {
            release += if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        }
        coflows.push(Coflow::new(flows, release, 1.0)?);
    }
    CoflowInstance::new(n, coflows)
}
