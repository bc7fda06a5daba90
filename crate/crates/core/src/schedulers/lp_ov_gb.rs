//! Ordering-LP grouping: each group is served as one aggregate coflow at rates
//! `d_ij / W(D)`, and leftover capacity is filled greedily in priority order.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{check_permutation, CoflowInstance};
use crate::relaxations::{solve_ordering_lp, CoflowOrdering};
use crate::sim::{execute, RatePolicy, SimView};

use super::{group_coflows, positions, Schedule};

const EMPTY_PORT: f64 = 1e-12;

pub(crate) struct GroupState {
    pub group_of: Vec<usize>,
    pub position: Vec<usize>,
}

impl GroupState {
    pub fn new(instance: &CoflowInstance, ordering: &[usize]) -> Result<Self> {
        let part = group_coflows(&ordering.to_vec(), instance)?;
        Ok(Self {
            group_of: part.group_of(instance.len()),
            position: positions(ordering),
        })
    }

    /// Lowest group among active coflows.
    pub fn active_group(&self, view: &SimView<'_>) -> Option<usize> {
        view.active
            .iter()
            .map(|&f| self.group_of[view.flows[f].key.coflow])
            .min()
    }

    /// Active flows sorted by `(group, position, source, dest)`.
    pub fn priority_order(&self, view: &SimView<'_>) -> Vec<usize> {
        let mut order = view.active.to_vec();
        order.sort_by_key(|&f| {
            let k = view.flows[f].key;
            (
                self.group_of[k.coflow],
                self.position[k.coflow],
                k.source,
                k.dest,
            )
        });
        order
    }
}

struct Aggregate {
    groups: GroupState,
}

impl RatePolicy for Aggregate {
    fn allocate(&mut self, view: &SimView<'_>) -> Result<Vec<(usize, f64)>> {
        let inst = view.instance;
        let n = inst.n_ports();
        let cap = inst.capacity();
        let Some(group) = self.groups.active_group(view) else {
            return Ok(Vec::new());
        };
        let order = self.groups.priority_order(view);

        // Aggregate demand of the group per port pair, and the earliest
        // coflow of the group still holding data on each pair.
        let mut pair_demand: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut pair_head: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut src = vec![0.0; n];
        let mut dst = vec![0.0; n];
        for &f in &order {
            let s = &view.flows[f];
            if self.groups.group_of[s.key.coflow] != group {
                continue;
            }
            let pair = (s.key.source, s.key.dest);
            *pair_demand.entry(pair).or_insert(0.0) += s.remaining;
            pair_head.entry(pair).or_insert(f);
            src[s.key.source] += s.remaining;
            dst[s.key.dest] += s.remaining;
        }
        let w = src.iter().chain(&dst).fold(0.0f64, |m, &v| m.max(v));

        let mut rate = vec![0.0; view.flows.len()];
        let mut rem_src = vec![cap; n];
        let mut rem_dst = vec![cap; n];
        for (pair, d) in &pair_demand {
            let r = d * cap / w;
            rate[pair_head[pair]] += r;
            rem_src[pair.0] = (rem_src[pair.0] - r).max(0.0);
            rem_dst[pair.1] = (rem_dst[pair.1] - r).max(0.0);
        }
        for &f in &order {
            let k = view.flows[f].key;
            let extra = rem_src[k.source].min(rem_dst[k.dest]);
            if extra > EMPTY_PORT {
                rate[f] += extra;
                rem_src[k.source] -= extra;
                rem_dst[k.dest] -= extra;
            }
        }
        Ok(order
            .into_iter()
            .filter(|&f| rate[f] > 0.0)
            .map(|f| (f, rate[f]))
            .collect())
    }
}

/// Groups the ordering-LP order by cumulative effective size and serves one
/// group at a time.
pub fn lp_ov_gb(instance: &CoflowInstance) -> Result<Schedule> {
    if instance.is_empty() {
        return Ok(Schedule::empty());
    }
    let lp = solve_ordering_lp(instance)?;
    lp_ov_gb_with(instance, &lp)
}

/// [`lp_ov_gb`] with an externally supplied coflow order.
pub fn lp_ov_gb_with(instance: &CoflowInstance, ordering: &dyn CoflowOrdering) -> Result<Schedule> {
    let ordering = ordering.ordering();
    check_permutation(ordering, instance.len())?;
    let mut policy = Aggregate {
        groups: GroupState::new(instance, ordering)?,
    };
    execute(instance, &mut policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coflow;
    use crate::schedulers::varys;
    use crate::sim::validate;

    #[test]
    fn single_coflow_matches_varys() {
        let c = Coflow::new([(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)], 1.0, 1.0).unwrap();
        let inst = CoflowInstance::new(2, vec![c]).unwrap();
        let a = lp_ov_gb(&inst).unwrap();
        let b = varys(&inst).unwrap();
        assert!((a.coflow_completions[0] - 5.0).abs() < 1e-9);
        assert!((b.coflow_completions[0] - 5.0).abs() < 1e-9);
        assert!(validate(&a, &inst).unwrap().ok);
    }

    #[test]
    fn same_pair_in_group_served_in_order() {
        let inst = CoflowInstance::new(
            1,
            vec![
                Coflow::new([(0, 0, 0.5)], 0.0, 1.0).unwrap(),
                Coflow::new([(0, 0, 0.5)], 0.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let s = lp_ov_gb_with(&inst, &vec![1, 0]).unwrap();
        assert_eq!(s.coflow_completions, vec![1.0, 0.5]);
        assert!(validate(&s, &inst).unwrap().ok);
    }
}
