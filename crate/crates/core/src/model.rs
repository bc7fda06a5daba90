//! Coflows, switch instances, and the per-port load arithmetic shared by every
//! other module.
//!
//! Ports are 0-based. A coflow's demand is a sparse `N x N` matrix keyed by
//! `(source, dest)`; only strictly positive entries are stored. Demands are data
//! units, release dates are time units, and a link moves `capacity` data units per
//! time unit (1.0 unless stated otherwise).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{argument, structural, Error, Result};

/// One flow `(source, dest, coflow)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowKey {
    #[serde(rename = "src")]
    pub source: usize,
    #[serde(rename = "dst")]
    pub dest: usize,
    pub coflow: usize,
}

impl FlowKey {
    pub fn new(source: usize, dest: usize, coflow: usize) -> Self {
        Self {
            source,
            dest,
            coflow,
        }
    }
}

/// A collection of flows released together and finishing with its last flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Coflow {
    demands: BTreeMap<(usize, usize), f64>,
    release: f64,
    weight: f64,
}

impl Coflow {
    /// Builds a coflow from `(source, dest, size)` triples. Zero sizes are dropped;
    /// duplicated pairs, negative or non-finite sizes are rejected.
    pub fn new(
        flows: impl IntoIterator<Item = (usize, usize, f64)>,
        release: f64,
        weight: f64,
    ) -> Result<Self> {
        if !(release.is_finite() && release >= 0.0) {
            return Err(argument(format!(
                "release must be finite and >= 0, got {release}"
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(argument(format!(
                "weight must be finite and > 0, got {weight}"
            )));
        }
        let mut demands = BTreeMap::new();
        for (src, dst, size) in flows {
            if !size.is_finite() || size < 0.0 {
                return Err(argument(format!(
                    "flow ({src},{dst}) has invalid size {size}"
                )));
            }
            if size == 0.0 {
                continue;
            }
            if demands.insert((src, dst), size).is_some() {
                return Err(structural(format!("duplicate flow ({src},{dst})")));
            }
        }
        if demands.is_empty() {
            return Err(argument("coflow has no positive demand"));
        }
        Ok(Self {
            demands,
            release,
            weight,
        })
    }

    pub fn demands(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.demands
    }

    /// Flows as `(source, dest, size)` in `(source, dest)` order.
    pub fn flows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.demands.iter().map(|(&(s, d), &v)| (s, d, v))
    }

    pub fn release(&self) -> f64 {
        self.release
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn num_flows(&self) -> usize {
        self.demands.len()
    }

    pub fn total_demand(&self) -> f64 {
        self.demands.values().sum()
    }

    pub fn with_weight(&self, weight: f64) -> Result<Self> {
        Coflow::new(self.flows(), self.release, weight)
    }

    pub fn with_release(&self, release: f64) -> Result<Self> {
        Coflow::new(self.flows(), release, self.weight)
    }

    fn max_port(&self) -> usize {
        self.demands
            .keys()
            .map(|&(s, d)| s.max(d))
            .max()
            .unwrap_or(0)
    }
}

/// Per-port loads of a coflow (or of a prefix of coflows), in data units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadVector {
    pub source: Vec<f64>,
    pub dest: Vec<f64>,
}

impl LoadVector {
    pub fn zeros(n_ports: usize) -> Self {
        Self {
            source: vec![0.0; n_ports],
            dest: vec![0.0; n_ports],
        }
    }

    /// Largest load over all source and destination ports.
    pub fn max(&self) -> f64 {
        self.source
            .iter()
            .chain(&self.dest)
            .fold(0.0, |m, &v| m.max(v))
    }

    pub fn accumulate(&mut self, other: &LoadVector) {
        for (a, b) in self.source.iter_mut().zip(&other.source) {
            *a += b;
        }
        for (a, b) in self.dest.iter_mut().zip(&other.dest) {
            *a += b;
        }
    }

    pub fn source_total(&self) -> f64 {
        self.source.iter().sum()
    }

    pub fn dest_total(&self) -> f64 {
        self.dest.iter().sum()
    }

    /// Load at node `s`, where `s < N` are sources and `N <= s < 2N` destinations.
    pub fn node(&self, s: usize) -> f64 {
        let n = self.source.len();
        if s < n {
            self.source[s]
        } else {
            self.dest[s - n]
        }
    }
}

/// Aggregate per-port loads `d_i^k`, `d_j^k` of one coflow.
pub fn aggregate_loads(coflow: &Coflow, n_ports: usize) -> Result<LoadVector> {
    let mut loads = LoadVector::zeros(n_ports);
    for (src, dst, size) in coflow.flows() {
        if src >= n_ports || dst >= n_ports {
            return Err(structural(format!(
                "flow ({src},{dst}) out of range for {n_ports} ports"
            )));
        }
        loads.source[src] += size;
        loads.dest[dst] += size;
    }
    Ok(loads)
}

/// Effective size `W(k)`: the largest per-port load of the coflow, in data units.
pub fn effective_size(coflow: &Coflow, n_ports: usize) -> Result<f64> {
    Ok(aggregate_loads(coflow, n_ports)?.max())
}

/// An `N x N` switch and the coflows to schedule on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct CoflowInstance {
    n_ports: usize,
    capacity: f64,
    coflows: Vec<Coflow>,
    loads: Vec<LoadVector>,
}

impl CoflowInstance {
    /// Instance with unit link capacity.
    pub fn new(n_ports: usize, coflows: Vec<Coflow>) -> Result<Self> {
        Self::with_capacity(n_ports, 1.0, coflows)
    }

    pub fn with_capacity(n_ports: usize, capacity: f64, coflows: Vec<Coflow>) -> Result<Self> {
        if n_ports == 0 {
            return Err(argument("switch needs at least one port"));
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(argument(format!(
                "capacity must be positive, got {capacity}"
            )));
        }
        let loads = coflows
            .iter()
            .enumerate()
            .map(|(k, c)| {
                aggregate_loads(c, n_ports).map_err(|_| {
                    structural(format!(
                        "coflow {k} uses port {} but the switch has {n_ports} ports",
                        c.max_port()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_ports,
            capacity,
            coflows,
            loads,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn coflows(&self) -> &[Coflow] {
        &self.coflows
    }

    pub fn coflow(&self, k: usize) -> &Coflow {
        &self.coflows[k]
    }

    pub fn len(&self) -> usize {
        self.coflows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coflows.is_empty()
    }

    /// Cached aggregate loads of coflow `k`.
    pub fn loads(&self, k: usize) -> &LoadVector {
        &self.loads[k]
    }

    /// `W(k)` in data units.
    pub fn effective_size(&self, k: usize) -> f64 {
        self.loads[k].max()
    }

    /// Converts a data volume into the time a single link needs to move it.
    pub fn time_for(&self, data: f64) -> f64 {
        data / self.capacity
    }

    /// All flows in `(coflow, source, dest)` order.
    pub fn flows(&self) -> impl Iterator<Item = (FlowKey, f64)> + '_ {
        self.coflows
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.flows().map(move |(s, d, v)| (FlowKey::new(s, d, k), v)))
    }

    pub fn num_flows(&self) -> usize {
        self.coflows.iter().map(Coflow::num_flows).sum()
    }

    pub fn total_demand(&self) -> f64 {
        self.coflows.iter().map(Coflow::total_demand).sum()
    }

    pub fn all_released_at_zero(&self) -> bool {
        self.coflows.iter().all(|c| c.release() == 0.0)
    }

    pub fn max_release(&self) -> f64 {
        self.coflows.iter().fold(0.0, |m, c| m.max(c.release()))
    }

    /// Time horizon `T = max_k r_k + total demand / capacity`.
    pub fn horizon(&self) -> f64 {
        self.max_release() + self.time_for(self.total_demand())
    }

    /// Copy of the instance with replaced weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(argument(format!(
                "{} weights given for {} coflows",
                weights.len(),
                self.len()
            )));
        }
        let coflows = self
            .coflows
            .iter()
            .zip(weights)
            .map(|(c, &w)| c.with_weight(w))
            .collect::<Result<Vec<_>>>()?;
        Self::with_capacity(self.n_ports, self.capacity, coflows)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Free function form of [`CoflowInstance::horizon`].
pub fn horizon(instance: &CoflowInstance) -> f64 {
    instance.horizon()
}

/// Per-node loads `W(1..k; s)` of the first `k` coflows of `ordering`, together
/// with `W(1..k)`, their maximum.
pub fn cumulative_load(
    instance: &CoflowInstance,
    ordering: &[usize],
    k: usize,
) -> Result<(LoadVector, f64)> {
    check_permutation(ordering, instance.len())?;
    if k == 0 || k > ordering.len() {
        return Err(argument(format!(
            "prefix length {k} outside 1..={}",
            ordering.len()
        )));
    }
    let mut acc = LoadVector::zeros(instance.n_ports());
    for &c in &ordering[..k] {
        acc.accumulate(instance.loads(c));
    }
    let w = acc.max();
    Ok((acc, w))
}

/// `W(1..k)` for every prefix length `k = 1..=K` of `ordering`, in data units.
pub fn prefix_effective_sizes(instance: &CoflowInstance, ordering: &[usize]) -> Result<Vec<f64>> {
    check_permutation(ordering, instance.len())?;
    let mut acc = LoadVector::zeros(instance.n_ports());
    Ok(ordering
        .iter()
        .map(|&c| {
            acc.accumulate(instance.loads(c));
            acc.max()
        })
        .collect())
}

pub(crate) fn check_permutation(ordering: &[usize], k: usize) -> Result<()> {
    if ordering.len() != k {
        return Err(argument(format!(
            "ordering has {} entries for {k} coflows",
            ordering.len()
        )));
    }
    let mut seen = vec![false; k];
    for &c in ordering {
        if c >= k || std::mem::replace(&mut seen[c], true) {
            return Err(argument(format!(
                "ordering is not a permutation: {ordering:?}"
            )));
        }
    }
    Ok(())
}

// On-disk layout of an instance.

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    n_ports: usize,
    #[serde(default = "unit_capacity")]
    capacity: f64,
    coflows: Vec<CoflowFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoflowFile {
    #[serde(default)]
    release: f64,
    #[serde(default = "unit_weight")]
    weight: f64,
    flows: Vec<FlowFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FlowFile {
    src: usize,
    dst: usize,
    size: f64,
}

fn unit_capacity() -> f64 {
    1.0
}

fn unit_weight() -> f64 {
    1.0
}

impl TryFrom<InstanceFile> for CoflowInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let coflows = file
            .coflows
            .into_iter()
            .map(|c| {
                Coflow::new(
                    c.flows.into_iter().map(|f| (f.src, f.dst, f.size)),
                    c.release,
                    c.weight,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        CoflowInstance::with_capacity(file.n_ports, file.capacity, coflows)
    }
}

impl From<CoflowInstance> for InstanceFile {
    fn from(inst: CoflowInstance) -> Self {
        InstanceFile {
            n_ports: inst.n_ports,
            capacity: inst.capacity,
            coflows: inst
                .coflows
                .iter()
                .map(|c| CoflowFile {
                    release: c.release,
                    weight: c.weight,
                    flows: c
                        .flows()
                        .map(|(src, dst, size)| FlowFile { src, dst, size })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coflow(flows: &[(usize, usize, f64)]) -> Coflow {
        Coflow::new(flows.iter().copied(), 0.0, 1.0).unwrap()
    }

    // Coflows of the 2x2 example where W(1)=2, W(2)=W(3)=3.
    fn three_coflows() -> CoflowInstance {
        CoflowInstance::new(
            2,
            vec![
                coflow(&[(0, 0, 2.0), (1, 1, 2.0)]),
                coflow(&[(0, 0, 3.0)]),
                coflow(&[(1, 1, 3.0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn aggregate_loads_diagonal() {
        let loads = aggregate_loads(&coflow(&[(0, 0, 2.0), (1, 1, 2.0)]), 2).unwrap();
        assert_eq!(loads.source, vec![2.0, 2.0]);
        assert_eq!(loads.dest, vec![2.0, 2.0]);
    }

    #[test]
    fn aggregate_loads_single_flow() {
        let loads = aggregate_loads(&coflow(&[(0, 1, 5.0)]), 2).unwrap();
        assert_eq!(loads.source, vec![5.0, 0.0]);
        assert_eq!(loads.dest, vec![0.0, 5.0]);
        let loads = aggregate_loads(&coflow(&[(0, 0, 1.0)]), 2).unwrap();
        assert_eq!(loads.source, vec![1.0, 0.0]);
        assert_eq!(loads.dest, vec![1.0, 0.0]);
    }

    #[test]
    fn aggregate_loads_rejects_out_of_range() {
        let err = aggregate_loads(&coflow(&[(0, 2, 1.0)]), 2).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn empty_and_invalid_coflows_rejected() {
        assert!(Coflow::new(std::iter::empty(), 0.0, 1.0).is_err());
        assert!(Coflow::new([(0, 0, 0.0)], 0.0, 1.0).is_err());
        assert!(Coflow::new([(0, 0, -1.0)], 0.0, 1.0).is_err());
        assert!(Coflow::new([(0, 0, 1.0)], -1.0, 1.0).is_err());
        assert!(Coflow::new([(0, 0, 1.0)], 0.0, 0.0).is_err());
        assert!(Coflow::new([(0, 0, 1.0), (0, 0, 2.0)], 0.0, 1.0).is_err());
    }

    #[test]
    fn effective_sizes() {
        assert_eq!(
            effective_size(&coflow(&[(0, 0, 2.0), (1, 1, 2.0)]), 2).unwrap(),
            2.0
        );
        assert_eq!(effective_size(&coflow(&[(0, 0, 3.0)]), 2).unwrap(), 3.0);
        assert_eq!(effective_size(&coflow(&[(0, 1, 5.0)]), 2).unwrap(), 5.0);
    }

    #[test]
    fn cumulative_load_prefixes() {
        let inst = three_coflows();
        let (_, w) = cumulative_load(&inst, &[0, 1, 2], 3).unwrap();
        assert_eq!(w, 5.0);
        let (_, w1) = cumulative_load(&inst, &[1, 0, 2], 1).unwrap();
        assert_eq!(w1, inst.effective_size(1));
        assert!(cumulative_load(&inst, &[0, 1, 2], 0).is_err());
        assert!(cumulative_load(&inst, &[0, 1, 2], 4).is_err());
        assert!(cumulative_load(&inst, &[0, 0, 2], 1).is_err());
    }

    #[test]
    fn horizon_examples() {
        let staggered_release = CoflowInstance::new(
            2,
            vec![
                Coflow::new([(0, 0, 1.0)], 0.0, 1.0).unwrap(),
                Coflow::new([(0, 1, 2.0)], 1.0, 1.0).unwrap(),
                Coflow::new([(1, 0, 2.0)], 1.0, 1.0).unwrap(),
                Coflow::new([(1, 1, 2.0)], 1.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(horizon(&staggered_release), 8.0);
        let single = CoflowInstance::new(2, vec![coflow(&[(0, 1, 4.0)])]).unwrap();
        assert_eq!(horizon(&single), 4.0);
        assert_eq!(horizon(&three_coflows()), 10.0);
    }

    #[test]
    fn instance_rejects_bad_ports() {
        let err = CoflowInstance::new(2, vec![coflow(&[(0, 3, 1.0)])]).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{"n_ports": 2, "coflows": [{"flows": [{"src": 0, "dst": 1, "size": 3}]}]}"#;
        let inst = CoflowInstance::from_json(text).unwrap();
        assert_eq!(inst.capacity(), 1.0);
        assert_eq!(inst.coflow(0).weight(), 1.0);
        assert_eq!(inst.coflow(0).release(), 0.0);
        let back = CoflowInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back, inst);
    }
}
