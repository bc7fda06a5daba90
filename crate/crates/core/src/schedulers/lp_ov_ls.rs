//! Ordering-LP list scheduling, offline and with periodic or per-arrival
//! re-solving.

use crate::error::{argument, Result};
use crate::model::{check_permutation, Coflow, CoflowInstance};
use crate::relaxations::{solve_ordering_lp, CoflowOrdering};
use crate::sim::{execute, RatePolicy, SimView, EVENT_EPS};

use super::{positions, Schedule};

/// Greedy matching over active flows in `(priority[coflow], source, dest)`
/// order at full link rate.
pub(crate) fn list_allocate(view: &SimView<'_>, priority: &[usize]) -> Vec<(usize, f64)> {
    let n = view.instance.n_ports();
    let mut order = view.active.to_vec();
    order.sort_by_key(|&f| {
        let k = view.flows[f].key;
        (priority[k.coflow], k.source, k.dest)
    });
    let mut src_busy = vec![false; n];
    let mut dst_busy = vec![false; n];
    let mut out = Vec::new();
    for f in order {
        let k = view.flows[f].key;
        if !src_busy[k.source] && !dst_busy[k.dest] {
            src_busy[k.source] = true;
            dst_busy[k.dest] = true;
            out.push((f, view.instance.capacity()));
        }
    }
    out
}

struct FixedOrder {
    priority: Vec<usize>,
}

impl RatePolicy for FixedOrder {
    fn allocate(&mut self, view: &SimView<'_>) -> Result<Vec<(usize, f64)>> {
        Ok(list_allocate(view, &self.priority))
    }
}

/// List scheduling in the order given by the ordering LP.
pub fn lp_ov_ls(instance: &CoflowInstance) -> Result<Schedule> {
    if instance.is_empty() {
        return Ok(Schedule::empty());
    }
    let lp = solve_ordering_lp(instance)?;
    lp_ov_ls_with(instance, &lp)
}

/// List scheduling in an externally supplied coflow order.
pub fn lp_ov_ls_with(instance: &CoflowInstance, ordering: &dyn CoflowOrdering) -> Result<Schedule> {
    let ordering = ordering.ordering();
    check_permutation(ordering, instance.len())?;
    execute(
        instance,
        &mut FixedOrder {
            priority: positions(ordering),
        },
    )
}

/// When the online variant recomputes its ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolveMode {
    /// Whenever a coflow is released.
    OnArrival,
    /// Every given number of time units, starting at time zero.
    Period(f64),
}

struct Online {
    mode: ResolveMode,
    priority: Vec<usize>,
    known: Vec<bool>,
    next_resolve: f64,
}

impl Online {
    fn resolve(&mut self, view: &SimView<'_>) -> Result<()> {
        let inst = view.instance;
        let mut ids = Vec::new();
        let mut residual = Vec::new();
        for k in view.active_coflows() {
            let flows = view
                .active
                .iter()
                .map(|&f| &view.flows[f])
                .filter(|s| s.key.coflow == k)
                .map(|s| (s.key.source, s.key.dest, s.remaining));
            residual.push(Coflow::new(flows, 0.0, inst.coflow(k).weight())?);
            ids.push(k);
        }
        let mut ordering: Vec<usize> = Vec::with_capacity(inst.len());
        if !ids.is_empty() {
            let sub = CoflowInstance::with_capacity(inst.n_ports(), inst.capacity(), residual)?;
            let lp = solve_ordering_lp(&sub)?;
            ordering.extend(lp.ordering.iter().map(|&i| ids[i]));
        }
        let mut in_order = vec![false; inst.len()];
        for &k in &ordering {
            in_order[k] = true;
        }
        ordering.extend((0..inst.len()).filter(|&k| !in_order[k]));
        self.priority = positions(&ordering);
        Ok(())
    }
}

impl RatePolicy for Online {
    fn allocate(&mut self, view: &SimView<'_>) -> Result<Vec<(usize, f64)>> {
        let mut arrived = false;
        for k in view.active_coflows() {
            if !self.known[k] {
                self.known[k] = true;
                arrived = true;
            }
        }
        let due = match self.mode {
            ResolveMode::OnArrival => arrived,
            ResolveMode::Period(p) => {
                if view.time + EVENT_EPS >= self.next_resolve {
                    while self.next_resolve <= view.time + EVENT_EPS {
                        self.next_resolve += p;
                    }
                    true
                } else {
                    false
                }
            }
        };
        if due {
            self.resolve(view)?;
        }
        Ok(list_allocate(view, &self.priority))
    }

    fn wake_time(&self) -> Option<f64> {
        match self.mode {
            ResolveMode::OnArrival => None,
            ResolveMode::Period(_) => Some(self.next_resolve),
        }
    }
}

/// List scheduling whose ordering is recomputed from remaining demands of the
/// released, unfinished coflows. Coflows not covered by the latest ordering
/// rank after it, by id.
pub fn lp_ov_ls_online(instance: &CoflowInstance, mode: ResolveMode) -> Result<Schedule> {
    if let ResolveMode::Period(p) = mode {
        if !(p.is_finite() && p > 0.0) {
            return Err(argument(format!(
                "resolve period must be positive, got {p}"
            )));
        }
    }
    if instance.is_empty() {
        return Ok(Schedule::empty());
    }
    let mut policy = Online {
        mode,
        priority: (0..instance.len()).collect(),
        known: vec![false; instance.len()],
        next_resolve: 0.0,
    };
    execute(instance, &mut policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::validate;

    fn inst(n: usize, coflows: &[(&[(usize, usize, f64)], f64)]) -> CoflowInstance {
        CoflowInstance::new(
            n,
            coflows
                .iter()
                .map(|(f, r)| Coflow::new(f.iter().copied(), *r, 1.0).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lone_flow_finishes_at_release_plus_size() {
        let i = inst(2, &[(&[(0, 1, 4.0)], 1.0)]);
        let s = lp_ov_ls(&i).unwrap();
        assert_eq!(s.coflow_completions, vec![5.0]);
        assert!(validate(&s, &i).unwrap().ok);
    }

    #[test]
    fn segments_are_matchings() {
        let i = inst(
            2,
            &[
                (&[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 1.0)], 0.0),
                (&[(0, 1, 1.0), (1, 1, 3.0)], 0.5),
            ],
        );
        let s = lp_ov_ls(&i).unwrap();
        for seg in &s.segments {
            let mut src = [0; 2];
            let mut dst = [0; 2];
            for r in &seg.rates {
                src[r.key.source] += 1;
                dst[r.key.dest] += 1;
                assert_eq!(r.rate, 1.0);
            }
            assert!(src.iter().chain(&dst).all(|&c| c <= 1));
        }
        assert!(validate(&s, &i).unwrap().ok);
    }

    #[test]
    fn online_matches_offline_without_arrivals() {
        let i = inst(
            2,
            &[
                (&[(0, 0, 1.0), (1, 1, 1.0)], 0.0),
                (&[(0, 0, 1.0)], 0.0),
                (&[(1, 1, 1.0)], 0.0),
            ],
        );
        assert_eq!(
            lp_ov_ls(&i).unwrap(),
            lp_ov_ls_online(&i, ResolveMode::OnArrival).unwrap()
        );
    }

    #[test]
    fn periodic_resolve_is_valid() {
        let i = inst(
            2,
            &[
                (&[(0, 0, 3.0), (1, 1, 1.0)], 0.0),
                (&[(0, 0, 1.0)], 1.5),
                (&[(1, 0, 2.0)], 0.2),
            ],
        );
        let s = lp_ov_ls_online(&i, ResolveMode::Period(0.7)).unwrap();
        assert!(validate(&s, &i).unwrap().ok);
        assert!(lp_ov_ls_online(&i, ResolveMode::Period(0.0)).is_err());
    }

    #[test]
    fn explicit_order_must_be_permutation() {
        let i = inst(2, &[(&[(0, 0, 1.0)], 0.0), (&[(1, 1, 1.0)], 0.0)]);
        assert!(lp_ov_ls_with(&i, &vec![0, 0]).is_err());
        assert!(lp_ov_ls_with(&i, &vec![1, 0]).is_ok());
    }
}
