//! Linear programs in a small general form and an exact two-phase primal simplex
//! solver for them.
//!
//! Problems are minimizations over variables with finite lower bounds and
//! optional upper bounds, subject to sparse `<=`, `>=` and `=` rows.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{argument, structural, Result};

mod simplex;

/// Absolute feasibility tolerance for rows and bounds.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for optimality.
pub const OPTIMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, point: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * point[j]).sum()
    }

    /// Signed slack: nonnegative iff the row holds (for `=` rows, minus the absolute residual).
    pub fn slack(&self, point: &[f64]) -> f64 {
        let lhs = self.activity(point);
        match self.relation {
            Relation::Le => self.rhs - lhs,
            Relation::Ge => lhs - self.rhs,
            Relation::Eq => -(lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarBounds {
    pub lower: f64,
    /// `f64::INFINITY` when unbounded above.
    pub upper: f64,
}

impl Default for VarBounds {
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }
}

/// `min c.x` subject to rows and variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
}

impl LpProblem {
    /// `num_vars` variables in `[0, inf)` with zero objective and no rows.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: vec![VarBounds::default(); num_vars],
        }
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = VarBounds { lower, upper };
    }

    /// Appends a row and returns its index.
    pub fn add_constraint(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective.iter().zip(point).map(|(c, x)| c * x).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars || self.bounds.len() != self.num_vars {
            return Err(structural(format!(
                "objective/bounds lengths ({}, {}) do not match {} variables",
                self.objective.len(),
                self.bounds.len(),
                self.num_vars
            )));
        }
        if let Some(c) = self.objective.iter().find(|c| !c.is_finite()) {
            return Err(structural(format!("non-finite objective coefficient {c}")));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if !b.lower.is_finite() || b.upper.is_nan() || b.upper == f64::NEG_INFINITY {
                return Err(structural(format!(
                    "variable {j} has unsupported bounds {b:?}"
                )));
            }
            if b.lower > b.upper {
                return Err(structural(format!("variable {j} has lower > upper")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(structural(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.num_vars {
                    return Err(structural(format!("row {i} references variable {j}")));
                }
                if !a.is_finite() {
                    return Err(structural(format!("row {i} has non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Dump in the common text LP layout, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        fn terms(out: &mut String, coeffs: impl Iterator<Item = (usize, f64)>) {
            let mut first = true;
            for (j, a) in coeffs {
                if a == 0.0 {
                    continue;
                }
                let sign = if a < 0.0 { '-' } else { '+' };
                if first && a >= 0.0 {
                    let _ = write!(out, " {} x{j}", a.abs());
                } else {
                    let _ = write!(out, " {sign} {} x{j}", a.abs());
                }
                first = false;
            }
            if first {
                out.push_str(" 0 x0");
            }
        }

        let mut out = String::from("Minimize\n obj:");
        terms(&mut out, self.objective.iter().copied().enumerate());
        out.push_str("\nSubject To\n");
        for (i, row) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            terms(&mut out, row.coeffs.iter().copied());
            let op = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for (j, b) in self.bounds.iter().enumerate() {
            if b.upper.is_infinite() {
                let _ = writeln!(out, " x{j} >= {}", b.lower);
            } else {
                let _ = writeln!(out, " {} <= x{j} <= {}", b.lower, b.upper);
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    /// Primal values; empty unless optimal.
    pub values: Vec<f64>,
    /// Row duals `y` with reduced costs `c - A^T y`; empty unless optimal.
    pub duals: Vec<f64>,
}

/// Solves `problem` to optimality, or reports infeasibility/unboundedness.
pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    simplex::solve(problem)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ViolationSite {
    Row(usize),
    Bound(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityViolation {
    pub site: ViolationSite,
    /// Negative slack of the violated row or bound.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<FeasibilityViolation>,
}

/// Checks `point` against every row and bound at [`FEASIBILITY_TOL`].
pub fn check_feasible(problem: &LpProblem, point: &[f64]) -> Result<FeasibilityReport> {
    check_feasible_with_tol(problem, point, FEASIBILITY_TOL)
}

pub fn check_feasible_with_tol(
    problem: &LpProblem,
    point: &[f64],
    tol: f64,
) -> Result<FeasibilityReport> {
    problem.validate()?;
    if point.len() != problem.num_vars {
        return Err(argument(format!(
            "point has {} entries for {} variables",
            point.len(),
            problem.num_vars
        )));
    }
    let mut violations = Vec::new();
    for (i, row) in problem.constraints.iter().enumerate() {
        let slack = row.slack(point);
        if slack < -tol {
            violations.push(FeasibilityViolation {
                site: ViolationSite::Row(i),
                slack,
            });
        }
    }
    for (j, (b, &x)) in problem.bounds.iter().zip(point).enumerate() {
        let slack = (x - b.lower).min(b.upper - x);
        if slack < -tol || x.is_nan() {
            violations.push(FeasibilityViolation {
                site: ViolationSite::Bound(j),
                slack,
            });
        }
    }
    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}
