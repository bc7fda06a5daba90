//! Interval-indexed LP over a doubling time grid `0, 1, 2, 4, ...`.
//!
//! `x[l][k]` is the fraction of coflow `k` completing in `(t_l, t_{l+1}]`; the
//! relaxed completion time is `sum_l t_l x[l][k]`.

use serde::{Deserialize, Serialize};

use super::sort_by_key;
use crate::error::{argument, internal, Result};
use crate::lpcore::{self, LpProblem, LpStatus, Relation};
use crate::model::CoflowInstance;

#[derive(Debug, Clone)]
pub struct IntervalLp {
    pub problem: LpProblem,
    /// Grid endpoints `t_0 = 0 < t_1 = 1 < ... < t_L`, with `t_L >= T`.
    pub grid: Vec<f64>,
    num_coflows: usize,
}

impl IntervalLp {
    pub fn num_intervals(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn var(&self, interval: usize, k: usize) -> usize {
        interval * self.num_coflows + k
    }
}

fn doubling_grid(horizon: f64) -> Vec<f64> {
    let mut grid = vec![0.0, 1.0];
    while *grid.last().unwrap() < horizon {
        let last = *grid.last().unwrap();
        grid.push(2.0 * last);
    }
    grid
}

pub fn build_interval_lp(instance: &CoflowInstance) -> Result<IntervalLp> {
    let kk = instance.len();
    if kk == 0 {
        return Err(argument("interval LP needs at least one coflow"));
    }
    let grid = doubling_grid(instance.horizon());
    let intervals = grid.len() - 1;
    let layout = IntervalLp {
        problem: LpProblem::new(intervals * kk),
        grid,
        num_coflows: kk,
    };
    let mut lp = layout.problem.clone();
    let grid = &layout.grid;

    for k in 0..kk {
        let c = instance.coflow(k);
        let earliest = c.release() + instance.time_for(instance.effective_size(k));
        for l in 0..intervals {
            let v = layout.var(l, k);
            lp.set_objective(v, c.weight() * grid[l]);
            let upper = if grid[l + 1] < earliest - 1e-12 {
                0.0
            } else {
                1.0
            };
            lp.set_bounds(v, 0.0, upper);
        }
    }
    for k in 0..kk {
        lp.add_constraint(
            (0..intervals).map(|l| (layout.var(l, k), 1.0)).collect(),
            Relation::Eq,
            1.0,
        );
    }
    for node in 0..2 * instance.n_ports() {
        let load: Vec<f64> = (0..kk)
            .map(|k| instance.time_for(instance.loads(k).node(node)))
            .collect();
        if load.iter().all(|&l| l == 0.0) {
            continue;
        }
        for l in 0..intervals {
            let coeffs = (0..=l)
                .flat_map(|u| {
                    load.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(move |(k, &v)| (u * kk + k, v))
                })
                .collect();
            lp.add_constraint(coeffs, Relation::Le, grid[l + 1]);
        }
    }
    Ok(IntervalLp {
        problem: lp,
        ..layout
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalLpResult {
    pub interval_endpoints: Vec<f64>,
    /// `x[k][l]`, one row per coflow.
    pub x: Vec<Vec<f64>>,
    pub relaxed_completions: Vec<f64>,
    pub ordering: Vec<usize>,
    pub objective: f64,
}

pub fn solve_interval_lp(instance: &CoflowInstance) -> Result<IntervalLpResult> {
    let lp = build_interval_lp(instance)?;
    let sol = lpcore::solve(&lp.problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(internal(format!("interval LP reported {:?}", sol.status)));
    }
    let kk = instance.len();
    let intervals = lp.num_intervals();
    let x: Vec<Vec<f64>> = (0..kk)
        .map(|k| {
            (0..intervals)
                .map(|l| sol.values[lp.var(l, k)].clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let relaxed_completions: Vec<f64> = x
        .iter()
        .map(|row| row.iter().zip(&lp.grid).map(|(x, t)| x * t).sum())
        .collect();
    let quantized: Vec<f64> = relaxed_completions
        .iter()
        .map(|f| (f * 1e6).round())
        .collect();
    Ok(IntervalLpResult {
        interval_endpoints: lp.grid.clone(),
        ordering: sort_by_key(&quantized),
        relaxed_completions,
        x,
        objective: sol.objective_value,
    })
}
