//! Depth-first branch and bound over unit-slot matching schedules.
//!
//! In every unit slot the search picks a maximal matching among released flows
//! with data left; when nothing is released it jumps to the next release.
//! States `(t, remaining)` are memoized with either their exact optimal future
//! cost or a proven lower bound. Once every coflow is released the future is
//! time-invariant, so such states are keyed at the last release time and
//! shifted.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Coflow, CoflowInstance, FlowKey};
use crate::relaxations::lp_lower_bound;
use crate::schedulers::{FlowCompletion, FlowRate, Schedule, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_ports: usize,
    pub max_total_demand: u32,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_ports: 3,
            max_total_demand: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimal_value: f64,
    pub optimal_schedule: Schedule,
    pub explored_states: u64,
}

// Bounds within this of the budget do not prune, so LP noise never cuts an
// optimal branch.
const BOUND_SLACK: f64 = 1e-7;

type Key = (u32, Vec<u8>);

#[derive(Debug, Clone)]
enum Choice {
    Send(Vec<usize>),
    Wait(u32),
}

struct Search<'a> {
    instance: &'a CoflowInstance,
    flows: Vec<FlowKey>,
    release: Vec<u32>,
    last_release: u32,
    deadlines: Option<Vec<f64>>,
    exact: HashMap<Key, f64>,
    lower: HashMap<Key, f64>,
    choice: HashMap<Key, Choice>,
    explored: u64,
}

fn refuse(msg: String) -> Error {
    Error::OracleRefused(msg)
}

impl<'a> Search<'a> {
    fn new(
        instance: &'a CoflowInstance,
        limits: OracleLimits,
        deadlines: Option<Vec<f64>>,
    ) -> Result<(Self, Vec<u8>)> {
        if instance.n_ports() > limits.max_ports {
            return Err(refuse(format!(
                "{} ports exceed the limit {}",
                instance.n_ports(),
                limits.max_ports
            )));
        }
        if instance.capacity() != 1.0 {
            return Err(refuse(format!(
                "capacity must be 1, got {}",
                instance.capacity()
            )));
        }
        let mut rem = Vec::new();
        let mut flows = Vec::new();
        for (key, size) in instance.flows() {
            if size.fract() != 0.0 || size > u8::MAX as f64 {
                return Err(refuse(format!("flow size {size} is not a small integer")));
            }
            flows.push(key);
            rem.push(size as u8);
        }
        let total: u32 = rem.iter().map(|&v| v as u32).sum();
        if total > limits.max_total_demand {
            return Err(refuse(format!(
                "total demand {total} exceeds the limit {}",
                limits.max_total_demand
            )));
        }
        let mut release = Vec::new();
        for c in instance.coflows() {
            let r = c.release();
            if r.fract() != 0.0 || r > u16::MAX as f64 {
                return Err(refuse(format!("release {r} is not a small integer")));
            }
            release.push(r as u32);
        }
        if let Some(d) = &deadlines {
            if d.len() != instance.len() {
                return Err(refuse(format!(
                    "{} deadlines for {} coflows",
                    d.len(),
                    instance.len()
                )));
            }
        }
        let last_release = release.iter().copied().max().unwrap_or(0);
        let search = Self {
            instance,
            flows,
            release,
            last_release,
            deadlines,
            exact: HashMap::new(),
            lower: HashMap::new(),
            choice: HashMap::new(),
            explored: 0,
        };
        Ok((search, rem))
    }

    fn coflow_done(&self, rem: &[u8]) -> Vec<bool> {
        let mut done = vec![true; self.instance.len()];
        for (f, &r) in rem.iter().enumerate() {
            if r > 0 {
                done[self.flows[f].coflow] = false;
            }
        }
        done
    }

    fn residual_loads(&self, rem: &[u8]) -> Vec<u32> {
        let n = self.instance.n_ports();
        let mut w = vec![0u32; self.instance.len()];
        let mut loads = vec![vec![0u32; 2 * n]; self.instance.len()];
        for (f, &r) in rem.iter().enumerate() {
            let k = self.flows[f];
            loads[k.coflow][k.source] += r as u32;
            loads[k.coflow][n + k.dest] += r as u32;
        }
        for (k, l) in loads.iter().enumerate() {
            w[k] = l.iter().copied().max().unwrap_or(0);
        }
        w
    }

    /// Cheap lower bound on the future cost at absolute time `t`, or `None`
    /// when some deadline can no longer be met.
    fn simple_bound(&self, t: u32, rem: &[u8]) -> Option<f64> {
        let w = self.residual_loads(rem);
        let mut bound = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0 {
                continue;
            }
            let finish = t.max(self.release[k]) + wk;
            if let Some(d) = &self.deadlines {
                if finish as f64 > d[k] + 1e-9 {
                    return None;
                }
            }
            bound += self.instance.coflow(k).weight() * finish as f64;
        }
        Some(bound)
    }

    fn lp_bound(&self, t: u32, rem: &[u8]) -> Result<f64> {
        let mut coflows = Vec::new();
        let mut shift = 0.0;
        for k in 0..self.instance.len() {
            let flows: Vec<(usize, usize, f64)> = rem
                .iter()
                .enumerate()
                .filter(|&(f, &r)| r > 0 && self.flows[f].coflow == k)
                .map(|(f, &r)| (self.flows[f].source, self.flows[f].dest, r as f64))
                .collect();
            if flows.is_empty() {
                continue;
            }
            let w = self.instance.coflow(k).weight();
            let r = self.release[k].saturating_sub(t) as f64;
            coflows.push(Coflow::new(flows, r, w)?);
            shift += w * t as f64;
        }
        if coflows.len() < 2 {
            return Ok(0.0);
        }
        let sub = CoflowInstance::new(self.instance.n_ports(), coflows)?;
        Ok(lp_lower_bound(&sub)? + shift)
    }

    fn key(&self, t: u32, rem: &[u8]) -> (Key, f64) {
        if self.deadlines.is_none() && t > self.last_release {
            let done = self.coflow_done(rem);
            let pending: f64 = (0..self.instance.len())
                .filter(|&k| !done[k])
                .map(|k| self.instance.coflow(k).weight())
                .sum();
            let offset = (t - self.last_release) as f64 * pending;
            ((self.last_release, rem.to_vec()), offset)
        } else {
            ((t, rem.to_vec()), 0.0)
        }
    }

    /// Maximal matchings among the given candidate flows.
    fn matchings(&self, candidates: &[usize]) -> Vec<Vec<usize>> {
        fn rec(
            s: &Search<'_>,
            i: usize,
            candidates: &[usize],
            used_src: u32,
            used_dst: u32,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if i == candidates.len() {
                let maximal = candidates.iter().all(|&f| {
                    let k = s.flows[f];
                    cur.contains(&f)
                        || used_src & (1 << k.source) != 0
                        || used_dst & (1 << k.dest) != 0
                });
                if maximal {
                    out.push(cur.clone());
                }
                return;
            }
            let f = candidates[i];
            let k = s.flows[f];
            if used_src & (1 << k.source) == 0 && used_dst & (1 << k.dest) == 0 {
                cur.push(f);
                rec(
                    s,
                    i + 1,
                    candidates,
                    used_src | 1 << k.source,
                    used_dst | 1 << k.dest,
                    cur,
                    out,
                );
                cur.pop();
            }
            rec(s, i + 1, candidates, used_src, used_dst, cur, out);
        }
        let mut out = Vec::new();
        rec(self, 0, candidates, 0, 0, &mut Vec::new(), &mut out);
        out
    }

    /// Optimal future cost from `(t, rem)` if it is below `budget`; otherwise a
    /// value `>= budget`.
    fn search(&mut self, t: u32, rem: &[u8], budget: f64) -> Result<f64> {
        if rem.iter().all(|&r| r == 0) {
            return Ok(0.0);
        }
        let (key, offset) = self.key(t, rem);
        let t = key.0;
        let budget = budget - offset;
        if let Some(&v) = self.exact.get(&key) {
            return Ok(v + offset);
        }
        if let Some(&lb) = self.lower.get(&key) {
            if lb >= budget {
                return Ok(lb + offset);
            }
        }
        let Some(mut lb) = self.simple_bound(t, rem) else {
            self.lower.insert(key, f64::INFINITY);
            return Ok(f64::INFINITY);
        };
        if lb < budget - BOUND_SLACK {
            lb = lb.max(self.lp_bound(t, rem)? - BOUND_SLACK);
        }
        if lb >= budget {
            self.lower.insert(key, lb);
            return Ok(lb + offset);
        }
        self.explored += 1;

        let candidates: Vec<usize> = (0..rem.len())
            .filter(|&f| rem[f] > 0 && self.release[self.flows[f].coflow] <= t)
            .collect();
        let mut best = budget;
        let mut best_choice = None;
        if candidates.is_empty() {
            let next = self
                .release
                .iter()
                .copied()
                .filter(|&r| r > t)
                .min()
                .expect("unreleased work remains");
            let v = self.search(next, rem, best)?;
            if v < best {
                best = v;
                best_choice = Some(Choice::Wait(next));
            }
        } else {
            let done_before = self.coflow_done(rem);
            let mut children: Vec<(f64, Vec<usize>, Vec<u8>, f64)> = Vec::new();
            for m in self.matchings(&candidates) {
                let mut next = rem.to_vec();
                for &f in &m {
                    next[f] -= 1;
                }
                let done = self.coflow_done(&next);
                let immediate: f64 = (0..self.instance.len())
                    .filter(|&k| done[k] && !done_before[k])
                    .map(|k| self.instance.coflow(k).weight() * (t + 1) as f64)
                    .sum();
                if let Some(d) = &self.deadlines {
                    let late = (0..self.instance.len())
                        .any(|k| done[k] && !done_before[k] && (t + 1) as f64 > d[k] + 1e-9);
                    if late {
                        continue;
                    }
                }
                let Some(b) = self.simple_bound(t + 1, &next) else {
                    continue;
                };
                children.push((immediate + b, m, next, immediate));
            }
            children.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (_, m, next, immediate) in children {
                if immediate >= best {
                    continue;
                }
                let v = immediate + self.search(t + 1, &next, best - immediate)?;
                if v < best {
                    best = v;
                    best_choice = Some(Choice::Send(m));
                }
            }
        }
        match best_choice {
            Some(c) => {
                self.exact.insert(key.clone(), best);
                self.choice.insert(key, c);
                Ok(best + offset)
            }
            None => {
                self.lower.insert(key, budget);
                Ok(budget + offset)
            }
        }
    }

    fn rebuild(&self, mut rem: Vec<u8>) -> Result<Schedule> {
        let mut t = 0u32;
        let mut segments = Vec::new();
        let mut finish = vec![0.0; rem.len()];
        while rem.iter().any(|&r| r > 0) {
            let (key, _) = self.key(t, &rem);
            match self.choice.get(&key) {
                Some(Choice::Wait(next)) => t = *next,
                Some(Choice::Send(m)) => {
                    let rates = m
                        .iter()
                        .map(|&f| {
                            rem[f] -= 1;
                            finish[f] = (t + 1) as f64;
                            FlowRate {
                                key: self.flows[f],
                                rate: 1.0,
                            }
                        })
                        .collect();
                    segments.push(Segment {
                        start: t as f64,
                        end: (t + 1) as f64,
                        rates,
                    });
                    t += 1;
                }
                None => return Err(crate::error::internal("oracle lost its optimal path")),
            }
        }
        let mut coflow_completions = vec![0.0f64; self.instance.len()];
        for (f, key) in self.flows.iter().enumerate() {
            coflow_completions[key.coflow] = coflow_completions[key.coflow].max(finish[f]);
        }
        let flow_completions = self
            .flows
            .iter()
            .zip(&finish)
            .map(|(&key, &time)| FlowCompletion { key, time })
            .collect();
        Ok(Schedule {
            segments,
            coflow_completions,
            flow_completions,
        })
    }
}

fn run(
    instance: &CoflowInstance,
    limits: OracleLimits,
    deadlines: Option<Vec<f64>>,
) -> Result<OracleResult> {
    let (mut s, rem) = Search::new(instance, limits, deadlines)?;
    let budget = instance.coflows().iter().map(|c| c.weight()).sum::<f64>()
        * instance.horizon().max(1.0)
        + 1.0;
    let value = s.search(0, &rem, budget)?;
    if value >= budget {
        return Err(refuse("no schedule meets the deadlines".into()));
    }
    let optimal_schedule = s.rebuild(rem)?;
    Ok(OracleResult {
        optimal_value: value,
        optimal_schedule,
        explored_states: s.explored,
    })
}

/// Exact minimum total weighted completion time over unit-slot matching
/// schedules. Requires integer sizes and releases, unit capacity and an
/// instance within `limits`.
pub fn oracle_opt(instance: &CoflowInstance, limits: OracleLimits) -> Result<OracleResult> {
    run(instance, limits, None)
}

/// [`oracle_opt`] restricted to schedules finishing each coflow `k` by
/// `deadlines[k]`.
pub fn oracle_opt_with_deadlines(
    instance: &CoflowInstance,
    limits: OracleLimits,
    deadlines: &[f64],
) -> Result<OracleResult> {
    run(instance, limits, Some(deadlines.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::validate;
    use crate::verify::{counterexample_fixture, diagonal_sized, diagonal_unit, staggered_release};

    fn opt(inst: &CoflowInstance) -> OracleResult {
        let r = oracle_opt(inst, OracleLimits::default()).unwrap();
        assert!(validate(&r.optimal_schedule, inst).unwrap().ok);
        assert!(
            (r.optimal_schedule.total_weighted_completion(inst) - r.optimal_value).abs() < 1e-9
        );
        r
    }

    #[test]
    fn worked_examples() {
        assert_eq!(opt(&diagonal_unit()).optimal_value, 4.0);
        assert_eq!(opt(&diagonal_sized()).optimal_value, 11.0);
        assert_eq!(opt(&staggered_release()).optimal_value, 12.0);
    }

    #[test]
    fn single_coflow_is_release_plus_size() {
        let inst = CoflowInstance::new(
            2,
            vec![Coflow::new([(0, 1, 3.0), (1, 1, 1.0)], 2.0, 2.0).unwrap()],
        )
        .unwrap();
        assert_eq!(opt(&inst).optimal_value, 2.0 * (2.0 + 4.0));
    }

    #[test]
    fn idle_gap_before_release() {
        let inst = CoflowInstance::new(
            1,
            vec![
                Coflow::new([(0, 0, 1.0)], 0.0, 1.0).unwrap(),
                Coflow::new([(0, 0, 2.0)], 5.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(opt(&inst).optimal_value, 1.0 + 7.0);
    }

    #[test]
    fn deadline_forces_late_green() {
        let inst = counterexample_fixture();
        let r = oracle_opt_with_deadlines(&inst, OracleLimits::default(), &[2.0, f64::INFINITY])
            .unwrap();
        assert_eq!(r.optimal_schedule.coflow_completions, vec![2.0, 4.0]);
        let free = oracle_opt(&inst, OracleLimits::default()).unwrap();
        assert_eq!(free.optimal_schedule.coflow_completions, vec![2.0, 4.0]);
        assert!(oracle_opt_with_deadlines(&inst, OracleLimits::default(), &[1.0, 9.0]).is_err());
    }

    #[test]
    fn limits_refuse() {
        let big =
            CoflowInstance::new(4, vec![Coflow::new([(3, 3, 1.0)], 0.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(
            oracle_opt(&big, OracleLimits::default()),
            Err(Error::OracleRefused(_))
        ));
        let heavy =
            CoflowInstance::new(1, vec![Coflow::new([(0, 0, 15.0)], 0.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(
            oracle_opt(&heavy, OracleLimits::default()),
            Err(Error::OracleRefused(_))
        ));
        let frac =
            CoflowInstance::new(1, vec![Coflow::new([(0, 0, 1.5)], 0.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(
            oracle_opt(&frac, OracleLimits::default()),
            Err(Error::OracleRefused(_))
        ));
    }
}
