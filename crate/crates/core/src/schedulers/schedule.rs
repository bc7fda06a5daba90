use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{CoflowInstance, FlowKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRate {
    #[serde(flatten)]
    pub key: FlowKey,
    pub rate: f64,
}

/// Constant rates over `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub rates: Vec<FlowRate>,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCompletion {
    #[serde(flatten)]
    pub key: FlowKey,
    pub time: f64,
}

/// Piecewise-constant rate assignment plus the resulting completion times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub segments: Vec<Segment>,
    /// `f_k` per coflow id.
    pub coflow_completions: Vec<f64>,
    /// Per-flow completion times, sorted by key.
    pub flow_completions: Vec<FlowCompletion>,
}

impl Schedule {
    pub fn empty() -> Self {
        Self {
            segments: Vec::new(),
            coflow_completions: Vec::new(),
            flow_completions: Vec::new(),
        }
    }

    pub fn total_weighted_completion(&self, instance: &CoflowInstance) -> f64 {
        instance
            .coflows()
            .iter()
            .zip(&self.coflow_completions)
            .map(|(c, f)| c.weight() * f)
            .sum()
    }

    pub fn makespan(&self) -> f64 {
        self.coflow_completions.iter().fold(0.0, |m, &f| m.max(f))
    }

    pub fn flow_completion_map(&self) -> BTreeMap<FlowKey, f64> {
        self.flow_completions
            .iter()
            .map(|c| (c.key, c.time))
            .collect()
    }

    /// Volume moved per flow over the whole schedule.
    pub fn transmitted(&self) -> BTreeMap<FlowKey, f64> {
        let mut out = BTreeMap::new();
        for seg in &self.segments {
            for r in &seg.rates {
                *out.entry(r.key).or_insert(0.0) += r.rate * seg.length();
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
