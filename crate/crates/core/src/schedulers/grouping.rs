use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{prefix_effective_sizes, CoflowInstance};
use crate::relaxations::CoflowOrdering;

/// Consecutive runs of an ordering whose cumulative effective sizes fall in
/// the same interval `(2^(m-1), 2^m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub groups: Vec<Vec<usize>>,
    /// Upper end `2^m` of the interval of each group, in time units.
    pub boundaries: Vec<f64>,
}

impl GroupPartition {
    /// Group index of every coflow id.
    pub fn group_of(&self, num_coflows: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; num_coflows];
        for (g, members) in self.groups.iter().enumerate() {
            for &k in members {
                out[k] = g;
            }
        }
        out
    }
}

/// The `m` with `2^(m-1) < w <= 2^m`, for `w > 0`.
pub fn interval_index(w: f64) -> i32 {
    debug_assert!(w > 0.0);
    let mut m = w.log2().ceil() as i32;
    while 2f64.powi(m) < w {
        m += 1;
    }
    while 2f64.powi(m - 1) >= w {
        m -= 1;
    }
    m
}

/// Walks `ordering`, placing each coflow by the interval of its cumulative
/// effective size `W(1..k)` (in time units).
pub fn group_coflows(
    ordering: &dyn CoflowOrdering,
    instance: &CoflowInstance,
) -> Result<GroupPartition> {
    let ordering = ordering.ordering();
    let prefix = prefix_effective_sizes(instance, ordering)?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut boundaries = Vec::new();
    let mut last = None;
    for (&k, &w) in ordering.iter().zip(&prefix) {
        let m = interval_index(instance.time_for(w));
        if last == Some(m) {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
            boundaries.push(2f64.powi(m));
            last = Some(m);
        }
    }
    Ok(GroupPartition { groups, boundaries })
}
