//! The ordering-variable LP: completion times `f_k` plus pairwise precedence
//! variables `delta[k][k']` ("k finishes before k'"), relaxed to `[0, 1]`.
//!
//! All loads are divided by the link capacity, so `f_k` is a time.

use serde::{Deserialize, Serialize};

use super::sort_by_key;
use crate::error::{argument, internal, Result};
use crate::lpcore::{self, check_feasible_with_tol, LpProblem, LpStatus, Relation};
use crate::model::CoflowInstance;

/// The full ordering LP together with its variable layout.
///
/// Variables are `f_0..f_{K-1}` followed by `delta[k][k']` for every ordered
/// pair `k != k'`, row-major with the diagonal skipped. Rows are, in order: the
/// `N*K` source-port rows, the `N*K` destination-port rows, the `K`
/// release-plus-size rows and the `K(K-1)/2` pair rows.
#[derive(Debug, Clone)]
pub struct OrderingLp {
    pub problem: LpProblem,
    num_coflows: usize,
}

impl OrderingLp {
    pub fn num_coflows(&self) -> usize {
        self.num_coflows
    }

    pub fn f_var(&self, k: usize) -> usize {
        k
    }

    pub fn delta_var(&self, k: usize, other: usize) -> usize {
        assert!(k != other, "no ordering variable for a coflow with itself");
        let kk = self.num_coflows;
        kk + k * (kk - 1) + if other < k { other } else { other - 1 }
    }
}

pub fn build_ordering_lp(instance: &CoflowInstance) -> Result<OrderingLp> {
    let kk = instance.len();
    if kk == 0 {
        return Err(argument("ordering LP needs at least one coflow"));
    }
    let n = instance.n_ports();
    let num_vars = kk + kk * (kk - 1);
    let layout = OrderingLp {
        problem: LpProblem::new(num_vars),
        num_coflows: kk,
    };
    let mut lp = layout.problem.clone();

    for k in 0..kk {
        lp.set_objective(k, instance.coflow(k).weight());
    }
    for k in 0..kk {
        for other in 0..kk {
            if k != other {
                lp.set_bounds(layout.delta_var(k, other), 0.0, 1.0);
            }
        }
    }

    let load = |k: usize, node: usize| instance.time_for(instance.loads(k).node(node));
    for side in 0..2 {
        for k in 0..kk {
            for port in 0..n {
                let node = side * n + port;
                let mut coeffs = vec![(k, 1.0)];
                for other in 0..kk {
                    let l = load(other, node);
                    if other != k && l != 0.0 {
                        coeffs.push((layout.delta_var(other, k), -l));
                    }
                }
                lp.add_constraint(coeffs, Relation::Ge, load(k, node));
            }
        }
    }
    for k in 0..kk {
        let c = instance.coflow(k);
        lp.add_constraint(
            vec![(k, 1.0)],
            Relation::Ge,
            instance.time_for(instance.effective_size(k)) + c.release(),
        );
    }
    for k in 0..kk {
        for other in k + 1..kk {
            lp.add_constraint(
                vec![
                    (layout.delta_var(k, other), 1.0),
                    (layout.delta_var(other, k), 1.0),
                ],
                Relation::Eq,
                1.0,
            );
        }
    }
    Ok(OrderingLp {
        problem: lp,
        ..layout
    })
}

/// Optimal solution of the ordering LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingLpResult {
    /// Relaxed completion times.
    pub f_tilde: Vec<f64>,
    /// `delta[k][k']`; the diagonal is zero.
    pub delta: Vec<Vec<f64>>,
    /// Coflow ids by ascending `f_tilde`, ties by lower id.
    pub ordering: Vec<usize>,
    pub objective: f64,
}

impl OrderingLpResult {
    /// The solution as a point of the full LP built by [`build_ordering_lp`].
    pub fn point(&self, lp: &OrderingLp) -> Vec<f64> {
        let kk = self.f_tilde.len();
        let mut x = vec![0.0; lp.problem.num_vars];
        x[..kk].copy_from_slice(&self.f_tilde);
        for k in 0..kk {
            for other in 0..kk {
                if k != other {
                    x[lp.delta_var(k, other)] = self.delta[k][other];
                }
            }
        }
        x
    }
}

/// Solves the ordering LP and extracts the coflow ordering.
///
/// The LP handed to the simplex is an equivalent reduced form: `delta[k'][k]`
/// is replaced by `1 - delta[k][k']` for `k < k'`, the release-plus-size rows
/// become lower bounds on `f_k`, and port rows implied by those bounds are
/// dropped. The solution is mapped back and checked against the full LP.
pub fn solve_ordering_lp(instance: &CoflowInstance) -> Result<OrderingLpResult> {
    let kk = instance.len();
    if kk == 0 {
        return Err(argument("ordering LP needs at least one coflow"));
    }
    let n = instance.n_ports();
    let pair_index = |a: usize, b: usize| -> usize {
        debug_assert!(a < b);
        kk + a * (2 * kk - a - 1) / 2 + (b - a - 1)
    };
    let num_vars = kk + kk * (kk - 1) / 2;
    let mut lp = LpProblem::new(num_vars);
    let floor: Vec<f64> = (0..kk)
        .map(|k| instance.time_for(instance.effective_size(k)) + instance.coflow(k).release())
        .collect();
    for k in 0..kk {
        lp.set_objective(k, instance.coflow(k).weight());
        lp.set_bounds(k, floor[k], f64::INFINITY);
    }
    for a in 0..kk {
        for b in a + 1..kk {
            lp.set_bounds(pair_index(a, b), 0.0, 1.0);
        }
    }
    for node in 0..2 * n {
        let load: Vec<f64> = (0..kk)
            .map(|k| instance.time_for(instance.loads(k).node(node)))
            .collect();
        for k in 0..kk {
            let mut coeffs = vec![(k, 1.0)];
            let mut rhs = load[k];
            for (other, &l) in load.iter().enumerate() {
                if other == k || l == 0.0 {
                    continue;
                }
                if other < k {
                    coeffs.push((pair_index(other, k), -l));
                } else {
                    coeffs.push((pair_index(k, other), l));
                    rhs += l;
                }
            }
            if coeffs.len() == 1 && rhs <= floor[k] {
                continue;
            }
            lp.add_constraint(coeffs, Relation::Ge, rhs);
        }
    }

    let sol = lpcore::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(internal(format!("ordering LP reported {:?}", sol.status)));
    }

    let f_tilde: Vec<f64> = sol.values[..kk].to_vec();
    let mut delta = vec![vec![0.0; kk]; kk];
    for a in 0..kk {
        for b in a + 1..kk {
            let y = sol.values[pair_index(a, b)].clamp(0.0, 1.0);
            delta[a][b] = y;
            delta[b][a] = 1.0 - y;
        }
    }
    let quantized: Vec<f64> = f_tilde.iter().map(|f| quantize(*f)).collect();
    let result = OrderingLpResult {
        ordering: sort_by_key(&quantized),
        objective: sol.objective_value,
        f_tilde,
        delta,
    };

    let full = build_ordering_lp(instance)?;
    let scale = 1.0 + floor.iter().fold(0.0f64, |m, &v| m.max(v)) * kk as f64;
    let report = check_feasible_with_tol(&full.problem, &result.point(&full), 1e-9 * scale)?;
    if !report.feasible {
        return Err(internal(format!(
            "ordering LP solution violates the full LP: {:?}",
            &report.violations[..report.violations.len().min(3)]
        )));
    }
    Ok(result)
}

/// Optimal ordering-LP objective, a lower bound on the optimal total weighted
/// completion time.
pub fn lp_lower_bound(instance: &CoflowInstance) -> Result<f64> {
    Ok(solve_ordering_lp(instance)?.objective)
}

// Relaxed completion times that differ only by solver noise count as ties.
fn quantize(f: f64) -> f64 {
    (f * 1e6).round()
}
