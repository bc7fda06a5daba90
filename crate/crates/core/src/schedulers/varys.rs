//! Smallest-effective-bottleneck-first ordering with minimum-allocation rates.

use crate::error::Result;
use crate::model::{CoflowInstance, LoadVector};
use crate::sim::{execute, RatePolicy, SimView};

use super::Schedule;

const EMPTY_PORT: f64 = 1e-12;

struct Varys;

impl RatePolicy for Varys {
    fn allocate(&mut self, view: &SimView<'_>) -> Result<Vec<(usize, f64)>> {
        let inst = view.instance;
        let n = inst.n_ports();
        let cap = inst.capacity();

        let coflows = view.active_coflows();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); inst.len()];
        let mut loads: Vec<LoadVector> = vec![LoadVector::zeros(n); inst.len()];
        for &f in view.active {
            let s = &view.flows[f];
            let k = s.key.coflow;
            members[k].push(f);
            loads[k].source[s.key.source] += s.remaining;
            loads[k].dest[s.key.dest] += s.remaining;
        }
        let mut order = coflows;
        order.sort_by(|&a, &b| loads[a].max().total_cmp(&loads[b].max()).then(a.cmp(&b)));

        let mut rem_src = vec![cap; n];
        let mut rem_dst = vec![cap; n];
        let mut rate = vec![0.0; view.flows.len()];
        for &k in &order {
            let lv = &loads[k];
            let mut gamma: f64 = 0.0;
            let mut blocked = false;
            for p in 0..n {
                for (load, rem) in [(lv.source[p], rem_src[p]), (lv.dest[p], rem_dst[p])] {
                    if load > 0.0 {
                        if rem <= EMPTY_PORT {
                            blocked = true;
                        } else {
                            gamma = gamma.max(load / rem);
                        }
                    }
                }
            }
            if blocked || gamma <= 0.0 {
                continue;
            }
            for &f in &members[k] {
                let s = &view.flows[f];
                let r = s.remaining / gamma;
                rate[f] = r;
                rem_src[s.key.source] = (rem_src[s.key.source] - r).max(0.0);
                rem_dst[s.key.dest] = (rem_dst[s.key.dest] - r).max(0.0);
            }
        }

        for src in 0..n {
            for &k in &order {
                for &f in &members[k] {
                    let key = view.flows[f].key;
                    if key.source != src {
                        continue;
                    }
                    let extra = rem_src[src].min(rem_dst[key.dest]);
                    if extra > EMPTY_PORT {
                        rate[f] += extra;
                        rem_src[src] -= extra;
                        rem_dst[key.dest] -= extra;
                    }
                }
            }
        }
        Ok(view
            .active
            .iter()
            .filter(|&&f| rate[f] > 0.0)
            .map(|&f| (f, rate[f]))
            .collect())
    }
}

/// Varys with fairness knob zero: SEBF on remaining effective size (ties by
/// id), rates `d / Gamma`, then leftover capacity handed out per source port.
pub fn varys(instance: &CoflowInstance) -> Result<Schedule> {
    if instance.is_empty() {
        return Ok(Schedule::empty());
    }
    execute(instance, &mut Varys)
}
