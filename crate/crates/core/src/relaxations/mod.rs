//! LP relaxations of the coflow scheduling problem and the coflow orderings
//! extracted from their solutions.

mod interval;
mod ordering;

pub use interval::{build_interval_lp, solve_interval_lp, IntervalLp, IntervalLpResult};
pub use ordering::{
    build_ordering_lp, lp_lower_bound, solve_ordering_lp, OrderingLp, OrderingLpResult,
};

/// Anything that yields a priority order over coflow ids.
pub trait CoflowOrdering {
    fn ordering(&self) -> &[usize];
}

impl CoflowOrdering for OrderingLpResult {
    fn ordering(&self) -> &[usize] {
        &self.ordering
    }
}

impl CoflowOrdering for IntervalLpResult {
    fn ordering(&self) -> &[usize] {
        &self.ordering
    }
}

impl CoflowOrdering for Vec<usize> {
    fn ordering(&self) -> &[usize] {
        self
    }
}

/// Coflow ids sorted by `key` ascending, ties broken by lower id.
pub(crate) fn sort_by_key(key: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
    order
}
