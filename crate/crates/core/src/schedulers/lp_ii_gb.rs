//! Interval-LP grouping executed in discrete slots: each group's demand matrix
//! is decomposed into permutations, one permutation per slot.

use std::collections::VecDeque;

use crate::error::{argument, Result};
use crate::model::CoflowInstance;
use crate::relaxations::solve_interval_lp;
use crate::sim::{execute, RatePolicy, SimView};

use super::bvn::{bvn_integer, Permutation};
use super::lp_ov_gb::GroupState;
use super::Schedule;

/// Slot granularity: one slot moves `unit` data units over a link, so it lasts
/// `unit / capacity` time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotConfig {
    pub unit: f64,
}

impl Default for SlotConfig {
    fn default() -> Self {
        Self { unit: 1.0 }
    }
}

const INTEGRAL_TOL: f64 = 1e-9;

fn units(data: f64, unit: f64) -> u64 {
    (data / unit).round() as u64
}

struct Slotted {
    groups: GroupState,
    unit: f64,
    slot_len: f64,
    plan: VecDeque<(u64, Permutation)>,
    plan_group: Option<usize>,
    plan_members: Vec<bool>,
    last_slot: u64,
    last_alloc: Vec<(usize, f64)>,
    next_wake: Option<f64>,
}

impl Slotted {
    fn replan(&mut self, view: &SimView<'_>, group: usize) -> Result<()> {
        let n = view.instance.n_ports();
        let mut g = vec![vec![0u64; n]; n];
        self.plan_members = vec![false; view.instance.len()];
        for &f in view.active {
            let s = &view.flows[f];
            if self.groups.group_of[s.key.coflow] == group {
                g[s.key.source][s.key.dest] += units(s.remaining, self.unit);
                self.plan_members[s.key.coflow] = true;
            }
        }
        let target = (0..n)
            .map(|i| g[i].iter().sum::<u64>().max(g.iter().map(|r| r[i]).sum()))
            .max()
            .unwrap_or(0);
        self.plan = bvn_integer(&g, target)?
            .into_iter()
            .filter(|(c, _)| *c > 0)
            .collect();
        self.plan_group = Some(group);
        Ok(())
    }
}

impl RatePolicy for Slotted {
    fn allocate(&mut self, view: &SimView<'_>) -> Result<Vec<(usize, f64)>> {
        let t = view.time;
        let s = t / self.slot_len;
        let slot = s.round();
        if (s - slot).abs() > INTEGRAL_TOL * s.abs().max(1.0) {
            self.next_wake = Some(s.ceil() * self.slot_len);
            let alive = |f: usize| view.active.binary_search(&f).is_ok();
            return Ok(self
                .last_alloc
                .iter()
                .copied()
                .filter(|&(f, _)| alive(f))
                .collect());
        }
        let slot = slot as u64;
        let mut elapsed = slot.saturating_sub(self.last_slot);
        while elapsed > 0 {
            let Some(front) = self.plan.front_mut() else {
                break;
            };
            let used = elapsed.min(front.0);
            front.0 -= used;
            elapsed -= used;
            if front.0 == 0 {
                self.plan.pop_front();
            }
        }
        self.last_slot = slot;
        self.next_wake = Some((slot + 1) as f64 * self.slot_len);

        let Some(group) = self.groups.active_group(view) else {
            self.last_alloc.clear();
            return Ok(Vec::new());
        };
        let arrived = view
            .active_coflows()
            .into_iter()
            .any(|k| self.groups.group_of[k] == group && !self.plan_members[k]);
        if self.plan.is_empty() || self.plan_group != Some(group) || arrived {
            self.replan(view, group)?;
        }

        let n = view.instance.n_ports();
        let mut chosen: Vec<Option<usize>> = vec![None; n];
        if let Some((_, perm)) = self.plan.front() {
            for f in self.groups.priority_order(view) {
                let k = view.flows[f].key;
                if perm[k.source] == k.dest && chosen[k.source].is_none() {
                    chosen[k.source] = Some(f);
                }
            }
        }
        let cap = view.instance.capacity();
        self.last_alloc = chosen.into_iter().flatten().map(|f| (f, cap)).collect();
        Ok(self.last_alloc.clone())
    }

    fn wake_time(&self) -> Option<f64> {
        self.next_wake
    }
}

/// [`lp_ii_gb_with`] at the default slot size of one data unit.
pub fn lp_ii_gb(instance: &CoflowInstance) -> Result<Schedule> {
    lp_ii_gb_with(instance, SlotConfig::default())
}

/// Orders by the interval-indexed LP, groups by cumulative effective size and
/// runs each group's integer permutation decomposition slot by slot. Port
/// pairs without data from the active group carry later coflows' data on the
/// same pair. Demands must be integral multiples of `slot.unit`.
pub fn lp_ii_gb_with(instance: &CoflowInstance, slot: SlotConfig) -> Result<Schedule> {
    if !(slot.unit.is_finite() && slot.unit > 0.0) {
        return Err(argument(format!(
            "slot unit must be positive, got {}",
            slot.unit
        )));
    }
    for (key, size) in instance.flows() {
        let u = size / slot.unit;
        if (u - u.round()).abs() > INTEGRAL_TOL * u.max(1.0) {
            return Err(argument(format!(
                "flow ({},{}) of coflow {} has size {size}, not a multiple of the slot unit {}; \
                 rescale the instance or choose a smaller unit",
                key.source, key.dest, key.coflow, slot.unit
            )));
        }
    }
    if instance.is_empty() {
        return Ok(Schedule::empty());
    }
    let lp = solve_interval_lp(instance)?;
    let mut policy = Slotted {
        groups: GroupState::new(instance, &lp.ordering)?,
        unit: slot.unit,
        slot_len: instance.time_for(slot.unit),
        plan: VecDeque::new(),
        plan_group: None,
        plan_members: vec![false; instance.len()],
        last_slot: 0,
        last_alloc: Vec::new(),
        next_wake: None,
    };
    execute(instance, &mut policy)
}
