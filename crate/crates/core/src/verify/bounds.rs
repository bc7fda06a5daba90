use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{prefix_effective_sizes, CoflowInstance};
use crate::relaxations::OrderingLpResult;
use crate::schedulers::Schedule;

const PREFIX_TOL: f64 = 1e-6;
const REL_TOL: f64 = 1e-9;

/// Approximation-ratio check against the LP bound: factor 4 when every
/// release is 0, otherwise 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub total: f64,
    pub lp_bound: f64,
    pub ratio: f64,
    pub factor: f64,
    pub holds: bool,
}

pub fn check_ratio_bound(
    instance: &CoflowInstance,
    schedule: &Schedule,
    lp_bound: f64,
) -> RatioReport {
    let total = schedule.total_weighted_completion(instance);
    let factor = if instance.all_released_at_zero() {
        4.0
    } else {
        5.0
    };
    RatioReport {
        total,
        lp_bound,
        ratio: total / lp_bound,
        factor,
        holds: total <= factor * lp_bound * (1.0 + REL_TOL) + REL_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub coflow: usize,
    pub value: f64,
    pub bound: f64,
}

/// Per-coflow check `f_k <= r_k + 2 W(1..k)` along `ordering`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub holds: bool,
    pub violations: Vec<BoundViolation>,
}

pub fn check_structural_bound(
    instance: &CoflowInstance,
    schedule: &Schedule,
    ordering: &[usize],
) -> Result<StructuralReport> {
    let prefix = prefix_effective_sizes(instance, ordering)?;
    let violations: Vec<BoundViolation> = ordering
        .iter()
        .zip(&prefix)
        .filter_map(|(&k, &w)| {
            let bound = instance.coflow(k).release() + 2.0 * instance.time_for(w);
            let value = schedule.coflow_completions[k];
            (value > bound * (1.0 + REL_TOL) + REL_TOL).then_some(BoundViolation {
                coflow: k,
                value,
                bound,
            })
        })
        .collect();
    Ok(StructuralReport {
        holds: violations.is_empty(),
        violations,
    })
}

/// Check of `f~_k >= W(1..k) / 2` for every prefix of the f~-sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixBoundReport {
    pub holds: bool,
    /// Smallest `f~_k - W(1..k) / 2` over all prefixes.
    pub min_slack: f64,
    pub violations: Vec<BoundViolation>,
}

pub fn check_prefix_bound(
    result: &OrderingLpResult,
    instance: &CoflowInstance,
) -> Result<PrefixBoundReport> {
    let prefix = prefix_effective_sizes(instance, &result.ordering)?;
    let mut min_slack = f64::INFINITY;
    let mut violations = Vec::new();
    for (&k, &w) in result.ordering.iter().zip(&prefix) {
        let bound = instance.time_for(w) / 2.0;
        let value = result.f_tilde[k];
        min_slack = min_slack.min(value - bound);
        if value < bound - PREFIX_TOL {
            violations.push(BoundViolation {
                coflow: k,
                value,
                bound,
            });
        }
    }
    Ok(PrefixBoundReport {
        holds: violations.is_empty(),
        min_slack,
        violations,
    })
}
