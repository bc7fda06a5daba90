//! Bounded-variable revised primal simplex with an explicit dense basis
//! inverse.
//!
//! Variables are shifted so every column lives in `[0, upper]`. Each row gets a
//! slack (inequalities). A crash step raises columns without an upper bound to
//! satisfy violated rows; rows still violated get an artificial column, phase
//! one drives the artificials to zero and phase two optimizes the real
//! objective. Pricing is Devex (largest squared reduced cost over reference
//! weight, lowest index on ties) and falls back to Bland's rule after a run of
//! degenerate pivots. The inverse is rebuilt from the original columns through
//! a dense LU periodically and before optimality is declared.

use nalgebra::{DMatrix, DVector};

use super::{LpProblem, LpSolution, LpStatus, Relation, FEASIBILITY_TOL, OPTIMALITY_TOL};
use crate::error::{internal, Result};

const PIVOT_TOL: f64 = 1e-7;
const HARRIS_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const ZERO_CLEAN: f64 = 1e-14;
const DEGENERATE_RUN_FOR_BLAND: usize = 50;
const REFACTOR_PERIOD: usize = 1000;
const MAX_CERTIFY_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Standardized constraint matrix by column, `(row, value)`.
    cols: Vec<Vec<(usize, f64)>>,
    b0: Vec<f64>,
    /// `B^-1`, row-major `m x m`.
    binv: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    /// Devex reference weights.
    weight: Vec<f64>,
    row_origin: Vec<usize>,
    row_sign: Vec<f64>,
    bland: bool,
    degenerate_run: usize,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

pub(super) fn solve(problem: &LpProblem) -> Result<LpSolution> {
    let n = problem.num_vars;
    let m = problem.constraints.len();
    let lower: Vec<f64> = problem.bounds.iter().map(|b| b.lower).collect();

    let mut slack_col = vec![None; m];
    let mut next = n;
    for (r, row) in problem.constraints.iter().enumerate() {
        if row.relation != Relation::Eq {
            slack_col[r] = Some(next);
            next += 1;
        }
    }
    let n_real = next;

    let residual: Vec<f64> = problem
        .constraints
        .iter()
        .map(|row| row.rhs - row.coeffs.iter().map(|&(j, a)| a * lower[j]).sum::<f64>())
        .collect();
    let crash = crash_basis(problem, &residual);

    // Decide row signs and the starting basic column of every row.
    let mut row_sign = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    for (r, row) in problem.constraints.iter().enumerate() {
        let gap = residual[r] - crash.activity[r];
        let (sign, art) = if crash.pinned[r].is_some() {
            (
                if row.relation == Relation::Le {
                    -1.0
                } else {
                    1.0
                },
                false,
            )
        } else {
            match row.relation {
                Relation::Le if gap >= 0.0 => (1.0, false),
                Relation::Ge if gap <= 0.0 => (-1.0, false),
                _ => (if gap >= 0.0 { 1.0 } else { -1.0 }, true),
            }
        };
        row_sign.push(sign);
        needs_artificial.push(art);
    }
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let ncols = n_real + n_art;

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    let mut b0 = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut art_next = n_real;
    for (r, row) in problem.constraints.iter().enumerate() {
        let sign = row_sign[r];
        for &(j, a) in &row.coeffs {
            match cols[j].last_mut() {
                Some((i, v)) if *i == r => *v += sign * a,
                _ => cols[j].push((r, sign * a)),
            }
        }
        if let Some(s) = slack_col[r] {
            let coef = if row.relation == Relation::Le {
                1.0
            } else {
                -1.0
            };
            cols[s].push((r, sign * coef));
        }
        b0[r] = sign * residual[r];
        basis[r] = if let Some(j) = crash.pinned[r] {
            j
        } else if needs_artificial[r] {
            cols[art_next].push((r, 1.0));
            art_next += 1;
            art_next - 1
        } else {
            slack_col[r].expect("inequality row has a slack")
        };
    }

    let mut upper = vec![f64::INFINITY; ncols];
    for (j, b) in problem.bounds.iter().enumerate() {
        upper[j] = b.upper - b.lower;
    }
    let mut state = vec![ColState::Lower; ncols];
    for &b in &basis {
        state[b] = ColState::Basic;
    }

    let mut binv = vec![0.0; m * m];
    for r in 0..m {
        binv[r * m + r] = 1.0;
    }
    let mut tab = Tableau {
        m,
        ncols,
        cols,
        beta: b0.clone(),
        b0,
        binv,
        basis,
        state,
        upper,
        cost: vec![0.0; ncols],
        d: vec![0.0; ncols],
        weight: vec![1.0; ncols],
        row_origin: (0..m).collect(),
        row_sign,
        bland: false,
        degenerate_run: 0,
        pivots_since_refactor: 0,
        iterations: 0,
        max_iterations: 100 * (m + ncols) + 1000,
    };
    if crash.pinned.iter().any(Option::is_some) {
        tab.refactor()?;
        tab.clamp_basic();
    }

    if n_art > 0 {
        let mut cost = vec![0.0; ncols];
        cost[n_real..].iter_mut().for_each(|c| *c = 1.0);
        tab.set_cost(cost);
        if let PhaseEnd::Unbounded = tab.run_phase()? {
            return Err(internal("phase one reported unbounded"));
        }
        let bmax = tab.b0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let infeasibility: f64 = (0..tab.m)
            .filter(|&r| tab.basis[r] >= n_real)
            .map(|r| tab.beta[r].max(0.0))
            .sum();
        if infeasibility > 1e-7 * (1.0 + bmax) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective_value: f64::NAN,
                values: Vec::new(),
                duals: Vec::new(),
            });
        }
        tab.drive_out_artificials(n_real)?;
        tab.drop_columns_from(n_real);
    }

    let mut cost = vec![0.0; tab.ncols];
    cost[..n].copy_from_slice(&problem.objective);
    tab.set_cost(cost);

    let mut rounds = 0;
    loop {
        if let PhaseEnd::Unbounded = tab.run_phase()? {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective_value: f64::NEG_INFINITY,
                values: Vec::new(),
                duals: Vec::new(),
            });
        }
        tab.refactor()?;
        let primal_gap = tab.primal_infeasibility();
        if primal_gap > 1e-7 {
            return Err(internal(format!(
                "basis lost primal feasibility ({primal_gap:e}) after refactorization"
            )));
        }
        tab.clamp_basic();
        rounds += 1;
        if tab.choose_entering().is_none() || rounds >= MAX_CERTIFY_ROUNDS {
            break;
        }
    }

    let mut shifted = vec![0.0; tab.ncols];
    for (j, s) in tab.state.iter().enumerate() {
        shifted[j] = match s {
            ColState::Lower | ColState::Basic => 0.0,
            ColState::Upper => tab.upper[j],
        };
    }
    for (r, &b) in tab.basis.iter().enumerate() {
        shifted[b] = tab.beta[r];
    }
    let values: Vec<f64> = (0..n).map(|j| lower[j] + shifted[j]).collect();
    let objective_value = problem.objective_value(&values);

    let y = tab.row_duals()?;
    let mut duals = vec![0.0; m];
    for (r, &yr) in y.iter().enumerate() {
        duals[tab.row_origin[r]] = yr * tab.row_sign[r];
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value,
        values,
        duals,
    })
}

struct Crash {
    /// Structural column made basic in each row, if any.
    pinned: Vec<Option<usize>>,
    /// Row activities (in shifted variables) at the crash point.
    activity: Vec<f64>,
}

/// Raises columns without an upper bound to satisfy violated inequality rows.
/// A column is used only if raising it worsens no row and it has no entry in a
/// row already pinned to another column; it becomes basic in the row that
/// needs the largest value. The pinned columns form a triangular block, so the
/// starting basis stays nonsingular.
fn crash_basis(problem: &LpProblem, residual: &[f64]) -> Crash {
    let m = problem.constraints.len();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); problem.num_vars];
    for (r, row) in problem.constraints.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            if a != 0.0 {
                columns[j].push((r, a));
            }
        }
    }
    let mut pinned = vec![None; m];
    let mut activity = vec![0.0; m];
    for (j, col) in columns.iter().enumerate() {
        if problem.bounds[j].upper.is_finite() || col.is_empty() {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut usable = true;
        for &(r, a) in col {
            let relation = problem.constraints[r].relation;
            let helps = match relation {
                Relation::Ge => a > 0.0,
                Relation::Le => a < 0.0,
                Relation::Eq => false,
            };
            if !helps || pinned[r].is_some() {
                usable = false;
                break;
            }
            let need = (residual[r] - activity[r]) / a;
            if need > best.map_or(0.0, |(_, v)| v) {
                best = Some((r, need));
            }
        }
        if let (true, Some((r, v))) = (usable, best) {
            for &(i, a) in col {
                activity[i] += a * v;
            }
            pinned[r] = Some(j);
        }
    }
    Crash { pinned, activity }
}

impl Tableau {
    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.recompute_reduced_costs();
        self.weight = vec![1.0; self.ncols];
        self.bland = false;
        self.degenerate_run = 0;
    }

    /// Simplex multipliers `c_B^T B^-1`.
    fn multipliers(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                for (yi, &v) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *yi += cb * v;
                }
            }
        }
        y
    }

    fn recompute_reduced_costs(&mut self) {
        let y = self.multipliers();
        self.d = (0..self.ncols)
            .map(|j| match self.state[j] {
                ColState::Basic => 0.0,
                _ => self.cost[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>(),
            })
            .collect();
    }

    /// `B^-1 a_q`.
    fn column(&self, q: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[q] {
            for (r, x) in alpha.iter_mut().enumerate() {
                *x += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    /// Row `r` of `B^-1 A`.
    fn row(&self, r: usize) -> Vec<f64> {
        let rho = &self.binv[r * self.m..(r + 1) * self.m];
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, a)| rho[i] * a).sum())
            .collect()
    }

    fn choose_entering(&self) -> Option<usize> {
        let mut best = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let score = match self.state[j] {
                ColState::Basic => continue,
                ColState::Lower if self.upper[j] > 0.0 && self.d[j] < -OPTIMALITY_TOL => -self.d[j],
                ColState::Upper if self.d[j] > OPTIMALITY_TOL => self.d[j],
                _ => continue,
            };
            if self.bland {
                return Some(j);
            }
            let score = score * score / self.weight[j];
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        best
    }

    /// Two-pass (Harris) ratio test. Returns the step length and, unless the
    /// entering column just flips bounds, the leaving row and whether its
    /// variable leaves at its upper bound.
    fn ratio_test(&self, q: usize, alpha: &[f64], dir: f64) -> (f64, Option<(usize, bool)>) {
        let limit = |r: usize, slack: f64| -> Option<(f64, bool)> {
            let a = alpha[r] * dir;
            if a > PIVOT_TOL {
                Some(((self.beta[r].max(0.0) + slack) / a, false))
            } else if a < -PIVOT_TOL {
                let ub = self.upper[self.basis[r]];
                ub.is_finite()
                    .then(|| ((ub - self.beta[r]).max(0.0) + slack) / -a)
                    .map(|l| (l, true))
            } else {
                None
            }
        };
        let relaxed = (0..self.m)
            .filter_map(|r| limit(r, HARRIS_TOL))
            .fold(f64::INFINITY, |t, (l, _)| t.min(l));
        if self.upper[q] <= relaxed || relaxed.is_infinite() {
            return (self.upper[q], None);
        }
        let mut leave: Option<(usize, bool)> = None;
        let mut theta = 0.0;
        for r in 0..self.m {
            let Some((l, to_upper)) = limit(r, 0.0) else {
                continue;
            };
            if l > relaxed {
                continue;
            }
            let better = match leave {
                None => true,
                Some((lr, _)) if self.bland => self.basis[r] < self.basis[lr],
                Some((lr, _)) => alpha[r].abs() > alpha[lr].abs(),
            };
            if better {
                leave = Some((r, to_upper));
                theta = l;
            }
        }
        (theta, leave)
    }

    /// Makes column `q` basic in row `r`; `alpha` is `B^-1 a_q`.
    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[r];
        let row = self.row(r);
        let dq = self.d[q];
        let wq = self.weight[q];
        for j in 0..self.ncols {
            if self.state[j] == ColState::Basic || j == q {
                continue;
            }
            let v = row[j] * inv;
            if v == 0.0 {
                continue;
            }
            self.d[j] -= dq * v;
            let w = &mut self.weight[j];
            *w = w.max(v * v * wq);
        }
        let leaving = self.basis[r];
        self.d[q] = 0.0;
        self.d[leaving] = -dq * inv;
        self.weight[leaving] = (wq * inv * inv).max(1.0);
        self.weight[q] = 1.0;

        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m]
            .iter()
            .map(|v| v * inv)
            .collect();
        for (i, &f) in alpha.iter().enumerate() {
            if i == r || f == 0.0 {
                continue;
            }
            let target = &mut self.binv[i * m..(i + 1) * m];
            for (x, &v) in target.iter_mut().zip(&pivot_row) {
                let y = *x - f * v;
                *x = if y.abs() < ZERO_CLEAN { 0.0 } else { y };
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&pivot_row);

        self.basis[r] = q;
        self.state[q] = ColState::Basic;
        if self.state[leaving] == ColState::Basic {
            self.state[leaving] = ColState::Lower;
        }
        self.pivots_since_refactor += 1;
    }

    fn run_phase(&mut self) -> Result<PhaseEnd> {
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(internal("simplex iteration limit reached"));
            }
            if self.pivots_since_refactor >= REFACTOR_PERIOD {
                self.refactor()?;
                self.clamp_basic();
            }
            let Some(q) = self.choose_entering() else {
                return Ok(PhaseEnd::Optimal);
            };
            let dir = if self.state[q] == ColState::Lower {
                1.0
            } else {
                -1.0
            };
            let alpha = self.column(q);
            let (theta, leave) = self.ratio_test(q, &alpha, dir);
            if theta.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }
            if theta > 0.0 {
                for (b, &a) in self.beta.iter_mut().zip(&alpha) {
                    *b -= dir * a * theta;
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 {
                        ColState::Upper
                    } else {
                        ColState::Lower
                    };
                }
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 {
                        theta
                    } else {
                        self.upper[q] - theta
                    };
                    let leaving = self.basis[r];
                    self.pivot(r, q, &alpha);
                    self.state[leaving] = if to_upper {
                        ColState::Upper
                    } else {
                        ColState::Lower
                    };
                    self.beta[r] = entering_value;
                }
            }
            if theta <= RATIO_TIE {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_RUN_FOR_BLAND {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
        }
    }

    /// Pivots basic artificials out at zero level; rows where that is impossible
    /// are linearly dependent on the others and get removed.
    fn drive_out_artificials(&mut self, n_real: usize) -> Result<()> {
        let mut redundant = Vec::new();
        for r in 0..self.m {
            if self.basis[r] < n_real {
                continue;
            }
            let row = self.row(r);
            let mut best = None;
            let mut best_abs = 1e-7;
            for (j, &v) in row.iter().enumerate().take(n_real) {
                if self.state[j] != ColState::Basic && v.abs() > best_abs {
                    best_abs = v.abs();
                    best = Some(j);
                }
            }
            match best {
                Some(j) => {
                    let value = match self.state[j] {
                        ColState::Upper => self.upper[j],
                        _ => 0.0,
                    };
                    let alpha = self.column(j);
                    self.pivot(r, j, &alpha);
                    self.beta[r] = value;
                }
                None => redundant.push(r),
            }
        }
        if !redundant.is_empty() {
            self.remove_rows(&redundant)?;
        }
        Ok(())
    }

    fn remove_rows(&mut self, rows: &[usize]) -> Result<()> {
        let keep: Vec<usize> = (0..self.m).filter(|r| !rows.contains(r)).collect();
        let mut new_index = vec![usize::MAX; self.m];
        for (k, &r) in keep.iter().enumerate() {
            new_index[r] = k;
        }
        for col in &mut self.cols {
            col.retain(|&(i, _)| new_index[i] != usize::MAX);
            for (i, _) in col.iter_mut() {
                *i = new_index[*i];
            }
        }
        for &r in rows {
            let art = self.basis[r];
            self.state[art] = ColState::Lower;
        }
        self.b0 = keep.iter().map(|&r| self.b0[r]).collect();
        self.beta = keep.iter().map(|&r| self.beta[r]).collect();
        self.basis = keep.iter().map(|&r| self.basis[r]).collect();
        self.row_origin = keep.iter().map(|&r| self.row_origin[r]).collect();
        self.row_sign = keep.iter().map(|&r| self.row_sign[r]).collect();
        self.m = keep.len();
        self.refactor()
    }

    fn drop_columns_from(&mut self, first: usize) {
        self.cols.truncate(first);
        self.state.truncate(first);
        self.upper.truncate(first);
        self.ncols = first;
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.m, self.m);
        for (k, &j) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[j] {
                b[(i, k)] = a;
            }
        }
        b
    }

    /// Rebuilds `B^-1`, the basic values and the reduced costs from the original
    /// columns.
    fn refactor(&mut self) -> Result<()> {
        self.pivots_since_refactor = 0;
        let m = self.m;
        if m == 0 {
            self.binv.clear();
            self.recompute_reduced_costs();
            return Ok(());
        }
        let inv = self
            .basis_matrix()
            .lu()
            .try_inverse()
            .ok_or_else(|| internal("singular basis"))?;
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                let v = inv[(i, k)];
                self.binv[i * m + k] = if v.abs() < ZERO_CLEAN { 0.0 } else { v };
            }
        }
        let mut rhs = DVector::from_column_slice(&self.b0);
        for j in 0..self.ncols {
            if self.state[j] == ColState::Upper {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * self.upper[j];
                }
            }
        }
        let beta = &inv * rhs;
        self.beta = beta.iter().copied().collect();
        self.recompute_reduced_costs();
        Ok(())
    }

    fn primal_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.beta)
            .map(|(&b, &v)| (-v).max(v - self.upper[b]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn clamp_basic(&mut self) {
        for (r, &b) in self.basis.iter().enumerate() {
            let v = &mut self.beta[r];
            if *v < 0.0 && *v > -FEASIBILITY_TOL * 1e2 {
                *v = 0.0;
            }
            if *v > self.upper[b] {
                *v = self.upper[b];
            }
        }
    }

    fn row_duals(&self) -> Result<Vec<f64>> {
        if self.m == 0 {
            return Ok(Vec::new());
        }
        let bt = self.basis_matrix().transpose();
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&b| self.cost[b]));
        let y = bt
            .lu()
            .solve(&cb)
            .ok_or_else(|| internal("singular basis"))?;
        Ok(y.iter().copied().collect())
    }
}
