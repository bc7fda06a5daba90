use std::collections::BTreeMap;

use crate::error::{internal, Result};
use crate::model::{CoflowInstance, FlowKey};
use crate::schedulers::{FlowCompletion, FlowRate, Schedule, Segment};

/// Events closer than this are merged into one.
pub const EVENT_EPS: f64 = 1e-9;

/// Runtime state of one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub key: FlowKey,
    pub size: f64,
    pub remaining: f64,
    pub release: f64,
    pub completed_at: Option<f64>,
}

/// What a policy sees at an event.
pub struct SimView<'a> {
    pub time: f64,
    pub instance: &'a CoflowInstance,
    /// Every flow of the instance, in `(coflow, source, dest)` order.
    pub flows: &'a [FlowState],
    /// Indices into `flows` of released, incomplete flows, in the same order.
    pub active: &'a [usize],
}

impl SimView<'_> {
    /// Released coflows with at least one incomplete flow, ascending id.
    pub fn active_coflows(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .active
            .iter()
            .map(|&f| self.flows[f].key.coflow)
            .collect();
        ids.dedup();
        ids
    }
}

/// A rate-allocation rule driven by the event loop.
pub trait RatePolicy {
    /// Rates for the current event, as `(index into view.flows, rate)`. Only
    /// active flows may receive a positive rate. The rates hold until the next
    /// event.
    fn allocate(&mut self, view: &SimView<'_>) -> Result<Vec<(usize, f64)>>;

    /// An extra wake-up time requested by the policy, if any.
    fn wake_time(&self) -> Option<f64> {
        None
    }
}

/// Next event time from `now`: the earliest flow finish (`remaining / rate`) or
/// anchor (release or wake-up) time. An anchor within [`EVENT_EPS`] after the
/// earliest candidate absorbs it, so coalesced events never precede a release.
/// `None` means nothing further can happen.
pub fn next_event(now: f64, active: &[(f64, f64)], anchors: &[f64]) -> Option<f64> {
    let finish = active
        .iter()
        .filter(|(_, rate)| *rate > 0.0)
        .map(|(rem, rate)| now + rem / rate)
        .fold(f64::INFINITY, f64::min);
    let anchors = anchors.iter().copied().filter(|&a| a > now);
    let first_anchor = anchors.clone().fold(f64::INFINITY, f64::min);
    let earliest = finish.min(first_anchor);
    if earliest.is_infinite() {
        return None;
    }
    Some(
        anchors
            .filter(|&a| a <= earliest + EVENT_EPS)
            .fold(earliest, f64::max),
    )
}

fn completion_tol(size: f64) -> f64 {
    1e-9 * size.max(1.0)
}

/// Runs `policy` from time zero until every flow completes.
pub fn execute(instance: &CoflowInstance, policy: &mut dyn RatePolicy) -> Result<Schedule> {
    let mut flows: Vec<FlowState> = instance
        .flows()
        .map(|(key, size)| FlowState {
            key,
            size,
            remaining: size,
            release: instance.coflow(key.coflow).release(),
            completed_at: None,
        })
        .collect();
    let mut releases: Vec<f64> = instance.coflows().iter().map(|c| c.release()).collect();
    releases.sort_by(f64::total_cmp);
    releases.dedup();

    let mut segments = Vec::new();
    let mut time = 0.0;
    let mut incomplete = flows.len();
    let max_events = 1_000_000 + 64 * flows.len();
    let mut events = 0;

    while incomplete > 0 {
        events += 1;
        if events > max_events {
            return Err(internal("event limit exceeded"));
        }
        let active: Vec<usize> = (0..flows.len())
            .filter(|&f| flows[f].completed_at.is_none() && flows[f].release <= time)
            .collect();
        let view = SimView {
            time,
            instance,
            flows: &flows,
            active: &active,
        };
        let raw = policy.allocate(&view)?;

        let mut rates: BTreeMap<usize, f64> = BTreeMap::new();
        for (f, r) in raw {
            if !r.is_finite() || r < -1e-12 {
                return Err(internal(format!("policy produced rate {r} for flow {f}")));
            }
            if r <= 0.0 {
                continue;
            }
            if f >= flows.len() || flows[f].completed_at.is_some() || flows[f].release > time {
                return Err(internal(format!(
                    "policy assigned a rate to inactive flow {f}"
                )));
            }
            *rates.entry(f).or_insert(0.0) += r;
        }

        let mut anchors: Vec<f64> = releases
            .iter()
            .copied()
            .filter(|&r| r > time)
            .take(1)
            .collect();
        if let Some(w) = policy.wake_time() {
            if w > time + EVENT_EPS {
                anchors.push(w);
            }
        }
        let pairs: Vec<(f64, f64)> = rates
            .iter()
            .map(|(&f, &r)| (flows[f].remaining, r))
            .collect();
        let Some(next) = next_event(time, &pairs, &anchors) else {
            return Err(internal(format!(
                "simulation stalled at t={time} with {incomplete} incomplete flows"
            )));
        };

        let dt = next - time;
        if dt > 0.0 && !rates.is_empty() {
            let seg_rates: Vec<FlowRate> = rates
                .iter()
                .map(|(&f, &rate)| FlowRate {
                    key: flows[f].key,
                    rate,
                })
                .collect();
            match segments.last_mut() {
                Some(Segment { end, rates, .. }) if *end == time && *rates == seg_rates => {
                    *end = next
                }
                _ => segments.push(Segment {
                    start: time,
                    end: next,
                    rates: seg_rates,
                }),
            }
        }
        for (&f, &rate) in &rates {
            let flow = &mut flows[f];
            let finish = time + flow.remaining / rate;
            flow.remaining -= rate * dt;
            if flow.remaining <= completion_tol(flow.size) || finish <= next + EVENT_EPS {
                flow.remaining = 0.0;
                flow.completed_at = Some(next);
                incomplete -= 1;
            }
        }
        time = next;
    }

    let mut coflow_completions = vec![0.0f64; instance.len()];
    let mut flow_completions = Vec::with_capacity(flows.len());
    for f in &flows {
        let t = f.completed_at.expect("all flows complete");
        let c = &mut coflow_completions[f.key.coflow];
        *c = c.max(t);
        flow_completions.push(FlowCompletion {
            key: f.key,
            time: t,
        });
    }
    Ok(Schedule {
        segments,
        coflow_completions,
        flow_completions,
    })
}
