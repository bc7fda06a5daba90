use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::model::{CoflowInstance, FlowKey};
use crate::schedulers::Schedule;

pub const CAPACITY_TOL: f64 = 1e-9;
pub const DEMAND_TOL: f64 = 1e-6;
const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CapacitySrc,
    CapacityDst,
    Release,
    Demand,
    CompletionDef,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::CapacitySrc => "capacity_src",
            Self::CapacityDst => "capacity_dst",
            Self::Release => "release",
            Self::Demand => "demand",
            Self::CompletionDef => "completion_def",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    /// How far the constraint is exceeded, in its own units.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

fn key_str(k: &FlowKey) -> String {
    format!("flow ({},{}) of coflow {}", k.source, k.dest, k.coflow)
}

/// Checks `schedule` against port capacities, release dates, demand
/// conservation and the completion-time definitions.
pub fn validate(schedule: &Schedule, instance: &CoflowInstance) -> Result<ValidationReport> {
    let n = instance.n_ports();
    let cap = instance.capacity();
    let mut prev_end = f64::NEG_INFINITY;
    for (s, seg) in schedule.segments.iter().enumerate() {
        if !(seg.start.is_finite() && seg.end.is_finite()) || seg.end < seg.start {
            return Err(structural(format!(
                "segment {s} has invalid bounds [{}, {})",
                seg.start, seg.end
            )));
        }
        if seg.start < prev_end - TIME_TOL {
            return Err(structural(format!("segment {s} overlaps its predecessor")));
        }
        prev_end = seg.end;
        for r in &seg.rates {
            let k = r.key;
            if k.source >= n || k.dest >= n || k.coflow >= instance.len() {
                return Err(structural(format!(
                    "segment {s} references unknown {}",
                    key_str(&k)
                )));
            }
            if !r.rate.is_finite() || r.rate < 0.0 {
                return Err(structural(format!(
                    "segment {s} has rate {} for {}",
                    r.rate,
                    key_str(&k)
                )));
            }
        }
    }
    if schedule.coflow_completions.len() != instance.len() {
        return Err(structural(format!(
            "{} coflow completions for {} coflows",
            schedule.coflow_completions.len(),
            instance.len()
        )));
    }

    let mut violations = Vec::new();
    let mut last_active: BTreeMap<FlowKey, f64> = BTreeMap::new();
    for (s, seg) in schedule.segments.iter().enumerate() {
        let mut src = vec![0.0; n];
        let mut dst = vec![0.0; n];
        for r in &seg.rates {
            if r.rate <= 0.0 {
                continue;
            }
            src[r.key.source] += r.rate;
            dst[r.key.dest] += r.rate;
            let release = instance.coflow(r.key.coflow).release();
            if seg.length() > 0.0 && seg.start < release - TIME_TOL {
                violations.push(Violation {
                    kind: ViolationKind::Release,
                    location: format!("segment {s}, {}", key_str(&r.key)),
                    magnitude: release - seg.start,
                });
            }
            if seg.length() > 0.0 {
                last_active.insert(r.key, seg.end);
            }
        }
        for (side, loads) in [
            (ViolationKind::CapacitySrc, &src),
            (ViolationKind::CapacityDst, &dst),
        ] {
            for (port, &load) in loads.iter().enumerate() {
                if load > cap + CAPACITY_TOL {
                    violations.push(Violation {
                        kind: side,
                        location: format!("segment {s}, port {port}"),
                        magnitude: load - cap,
                    });
                }
            }
        }
    }

    let moved = schedule.transmitted();
    let completions = schedule.flow_completion_map();
    let mut coflow_max = vec![f64::NEG_INFINITY; instance.len()];
    for (key, size) in instance.flows() {
        let sent = moved.get(&key).copied().unwrap_or(0.0);
        if (sent - size).abs() > DEMAND_TOL {
            violations.push(Violation {
                kind: ViolationKind::Demand,
                location: key_str(&key),
                magnitude: (sent - size).abs(),
            });
        }
        match completions.get(&key) {
            None => violations.push(Violation {
                kind: ViolationKind::CompletionDef,
                location: format!("{} has no completion time", key_str(&key)),
                magnitude: f64::INFINITY,
            }),
            Some(&t) => {
                let last = last_active.get(&key).copied().unwrap_or(0.0);
                if (t - last).abs() > TIME_TOL * t.abs().max(1.0) {
                    violations.push(Violation {
                        kind: ViolationKind::CompletionDef,
                        location: format!(
                            "{} completes at {t}, last transmission ends at {last}",
                            key_str(&key)
                        ),
                        magnitude: (t - last).abs(),
                    });
                }
                let m = &mut coflow_max[key.coflow];
                *m = m.max(t);
            }
        }
    }
    for key in moved.keys() {
        if instance
            .coflow(key.coflow)
            .demands()
            .get(&(key.source, key.dest))
            .is_none()
        {
            violations.push(Violation {
                kind: ViolationKind::Demand,
                location: format!("{} is not in the instance", key_str(key)),
                magnitude: moved[key],
            });
        }
    }
    for (k, (&f, &m)) in schedule
        .coflow_completions
        .iter()
        .zip(&coflow_max)
        .enumerate()
    {
        if m.is_finite() && (f - m).abs() > TIME_TOL * f.abs().max(1.0) {
            violations.push(Violation {
                kind: ViolationKind::CompletionDef,
                location: format!("coflow {k} completes at {f}, its last flow at {m}"),
                magnitude: (f - m).abs(),
            });
        }
    }
    Ok(ValidationReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// `sum_k w_k f_k` of a schedule.
pub fn total_weighted_completion(schedule: &Schedule, instance: &CoflowInstance) -> f64 {
    schedule.total_weighted_completion(instance)
}
