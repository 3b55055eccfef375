//! Dense bounded-variable simplex on an explicit tableau.
//!
//! Rows hold `B⁻¹A` for the current basis. Every column has finite lower
//! bound; upper bounds may be infinite. Nonbasic columns sit exactly on one
//! of their bounds. Primal simplex is used from scratch, dual simplex after
//! bound changes in branch and bound.

use std::time::Instant;

use crate::milp::{Comparator, MilpModel, Sense};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
pub(crate) const FEAS_TOL: f64 = 1e-7;
const REFRESH_EVERY: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Stopped,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    /// Number of columns belonging to model variables.
    n_struct: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Row index of each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Objective coefficients for phase 2, already in minimization form.
    phase2_cost: Vec<f64>,
    artificial_from: usize,
    pub(crate) pivots: u64,
}

impl Tableau {
    /// Standard form of `model` with a slack/artificial starting basis.
    pub(crate) fn from_model(model: &MilpModel) -> Tableau {
        let n_struct = model.num_vars();
        let rows = model.constraints();
        let m = rows.len();

        let mut lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
        let sign = match model.objective().sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n_struct];
        for (v, c) in &model.objective().terms {
            cost[v.0] += sign * c;
        }

        // Slack columns first, then artificials where a slack cannot start basic.
        let mut x: Vec<f64> = lower.clone();
        let mut slack_col = vec![usize::MAX; m];
        let mut slack_sign = vec![0.0; m];
        let mut n = n_struct;
        for (i, c) in rows.iter().enumerate() {
            if c.cmp != Comparator::Eq {
                slack_col[i] = n;
                slack_sign[i] = if c.cmp == Comparator::Le { 1.0 } else { -1.0 };
                n += 1;
            }
        }
        let artificial_from = n;
        let residual: Vec<f64> = rows
            .iter()
            .map(|c| c.rhs - c.terms.iter().map(|(v, a)| a * x[v.0]).sum::<f64>())
            .collect();
        let mut basis = vec![0; m];
        let mut art_sign = vec![0.0; m];
        for i in 0..m {
            if slack_col[i] != usize::MAX && residual[i] * slack_sign[i] >= 0.0 {
                basis[i] = slack_col[i];
            } else {
                art_sign[i] = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                basis[i] = n;
                n += 1;
            }
        }

        let mut a = vec![0.0; m * n];
        for (i, c) in rows.iter().enumerate() {
            let row = &mut a[i * n..(i + 1) * n];
            for (v, coef) in &c.terms {
                row[v.0] += coef;
            }
            if slack_col[i] != usize::MAX {
                row[slack_col[i]] = slack_sign[i];
            }
            if basis[i] >= artificial_from {
                row[basis[i]] = art_sign[i];
            }
            let piv = row[basis[i]];
            if piv != 1.0 {
                row.iter_mut().for_each(|e| *e /= piv);
            }
        }
        let rhs: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, c)| c.rhs / if basis[i] >= artificial_from { art_sign[i] } else { slack_sign[i] })
            .collect();

        lower.resize(n, 0.0);
        upper.resize(n_struct, 0.0);
        upper.resize(n, f64::INFINITY);
        x.resize(n, 0.0);
        let mut row_of = vec![usize::MAX; n];
        for (i, &b) in basis.iter().enumerate() {
            row_of[b] = i;
        }

        let mut phase2_cost = cost;
        phase2_cost.resize(n, 0.0);
        let mut t = Tableau {
            m,
            n,
            n_struct,
            a,
            rhs,
            basis,
            row_of,
            x,
            d: vec![0.0; n],
            cost: vec![0.0; n],
            lower,
            upper,
            phase2_cost,
            artificial_from,
            pivots: 0,
        };
        t.refresh_values();
        t
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    fn is_basic(&self, j: usize) -> bool {
        self.row_of[j] != usize::MAX
    }

    pub(crate) fn value(&self, j: usize) -> f64 {
        self.x[j]
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        self.x[..self.n_struct].to_vec()
    }

    pub(crate) fn objective(&self) -> f64 {
        self.phase2_cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    pub(crate) fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Recomputes basic values from `B⁻¹b` and the nonbasic values.
    fn refresh_values(&mut self) {
        for i in 0..self.m {
            let row = self.row(i);
            let mut v = self.rhs[i];
            for (j, &aij) in row.iter().enumerate() {
                if aij != 0.0 && self.row_of[j] == usize::MAX {
                    v -= aij * self.x[j];
                }
            }
            let b = self.basis[i];
            self.x[b] = v;
        }
    }

    fn refresh_reduced_costs(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.n..(i + 1) * self.n];
            for (dj, &aij) in self.d.iter_mut().zip(row) {
                *dj -= cb * aij;
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.a[r * n + q];
        {
            let row = &mut self.a[r * n..(r + 1) * n];
            row.iter_mut().for_each(|e| *e /= piv);
            row[q] = 1.0;
        }
        self.rhs[r] /= piv;
        let nz: Vec<(usize, f64)> =
            self.row(r).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        let rhs_r = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for &(j, v) in &nz {
                row[j] -= f * v;
            }
            row[q] = 0.0;
            self.rhs[i] -= f * rhs_r;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &(j, v) in &nz {
                self.d[j] -= dq * v;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = usize::MAX;
        self.basis[r] = q;
        self.row_of[q] = r;
        self.pivots += 1;
        if self.pivots % REFRESH_EVERY as u64 == 0 {
            self.refresh_values();
        }
    }

    /// Moves nonbasic column `j` by `delta`, updating basic values.
    fn shift_nonbasic(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[j] += delta;
        for i in 0..self.m {
            let aij = self.a[i * self.n + j];
            if aij != 0.0 {
                let b = self.basis[i];
                self.x[b] -= aij * delta;
            }
        }
    }

    /// Tightens the bounds of column `j`; nonbasic columns follow their bound.
    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if !self.is_basic(j) {
            let target = if self.x[j] < lower {
                lower
            } else if self.x[j] > upper {
                upper
            } else {
                self.x[j]
            };
            let delta = target - self.x[j];
            self.shift_nonbasic(j, delta);
            self.x[j] = target;
        }
    }

    fn at_upper(&self, j: usize) -> bool {
        self.x[j] >= self.upper[j] && self.upper[j] > self.lower[j]
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j] - self.lower[j] <= 0.0
    }

    fn primal(&mut self, deadline: Option<Instant>) -> LpStatus {
        let mut degenerate_run = 0usize;
        let max_iter = 50_000 + 50 * (self.m + self.n);
        for iter in 0..max_iter {
            if iter % 64 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                return LpStatus::Stopped;
            }
            let bland = degenerate_run > 50;
            // Entering column.
            let mut q = usize::MAX;
            let mut best = 0.0;
            for j in 0..self.n {
                if self.is_basic(j) || self.is_fixed(j) {
                    continue;
                }
                let dj = self.d[j];
                let score = if self.at_upper(j) { dj } else { -dj };
                if score > COST_TOL && (q == usize::MAX || (!bland && score > best)) {
                    q = j;
                    best = score;
                    if bland {
                        break;
                    }
                }
            }
            if q == usize::MAX {
                self.refresh_values();
                return LpStatus::Optimal;
            }
            let dir = if self.at_upper(q) { -1.0 } else { 1.0 };

            // Ratio test, bound flip of the entering column included.
            let mut step = self.upper[q] - self.lower[q];
            let mut leave = usize::MAX;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.a[i * self.n + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let t = if alpha > 0.0 {
                    (self.x[b] - self.lower[b]) / alpha
                } else if self.upper[b].is_finite() {
                    (self.upper[b] - self.x[b]) / -alpha
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let take = if t < step - 1e-12 {
                    true
                } else if t <= step + 1e-12 {
                    leave == usize::MAX
                        || if bland { b < self.basis[leave] } else { alpha.abs() > leave_alpha }
                } else {
                    false
                };
                if take {
                    step = step.min(t);
                    leave = i;
                    leave_alpha = alpha.abs();
                }
            }
            if step.is_infinite() {
                return LpStatus::Unbounded;
            }
            degenerate_run = if step <= 1e-12 { degenerate_run + 1 } else { 0 };
            if leave == usize::MAX {
                // Bound flip.
                self.shift_nonbasic(q, dir * step);
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                continue;
            }
            self.shift_nonbasic(q, dir * step);
            let b = self.basis[leave];
            let alpha = self.a[leave * self.n + q] * dir;
            self.x[b] = if alpha > 0.0 { self.lower[b] } else { self.upper[b] };
            self.pivot(leave, q);
        }
        LpStatus::Stopped
    }

    /// Dual simplex from a dual feasible basis.
    pub(crate) fn dual(&mut self, deadline: Option<Instant>) -> LpStatus {
        let max_iter = 50_000 + 50 * (self.m + self.n);
        for iter in 0..max_iter {
            if iter % 64 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                return LpStatus::Stopped;
            }
            // Leaving row: largest bound violation.
            let mut r = usize::MAX;
            let mut worst = FEAS_TOL;
            for i in 0..self.m {
                let b = self.basis[i];
                let v = (self.lower[b] - self.x[b]).max(self.x[b] - self.upper[b]);
                if v > worst {
                    worst = v;
                    r = i;
                }
            }
            if r == usize::MAX {
                return LpStatus::Optimal;
            }
            let b = self.basis[r];
            let below = self.x[b] < self.lower[b];
            let target = if below { self.lower[b] } else { self.upper[b] };

            let mut q = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            let row = &self.a[r * self.n..(r + 1) * self.n];
            for (j, &alpha) in row.iter().enumerate() {
                if alpha.abs() <= PIVOT_TOL || self.row_of[j] != usize::MAX || self.is_fixed(j) {
                    continue;
                }
                let up = self.at_upper(j);
                // Increasing x_b needs alpha < 0 at lower or alpha > 0 at upper.
                let eligible = if below { (alpha < 0.0) != up } else { (alpha > 0.0) != up };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && alpha.abs() > best_alpha) {
                    best_ratio = ratio;
                    best_alpha = alpha.abs();
                    q = j;
                }
            }
            if q == usize::MAX {
                return LpStatus::Infeasible;
            }
            let alpha = self.a[r * self.n + q];
            let delta = (self.x[b] - target) / alpha;
            self.shift_nonbasic(q, delta);
            self.x[b] = target;
            self.pivot(r, q);
        }
        LpStatus::Stopped
    }

    /// Two-phase primal simplex from the starting basis.
    pub(crate) fn solve_from_scratch(&mut self, deadline: Option<Instant>) -> LpStatus {
        if self.artificial_from < self.n {
            self.cost = vec![0.0; self.n];
            for j in self.artificial_from..self.n {
                self.cost[j] = 1.0;
            }
            self.refresh_reduced_costs();
            match self.primal(deadline) {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => return LpStatus::Infeasible,
                other => return other,
            }
            let infeasibility: f64 = (self.artificial_from..self.n).map(|j| self.x[j]).sum();
            let scale = 1.0 + self.rhs.iter().fold(0f64, |m, r| m.max(r.abs()));
            if infeasibility > FEAS_TOL * scale {
                return LpStatus::Infeasible;
            }
            for j in self.artificial_from..self.n {
                self.upper[j] = 0.0;
                if !self.is_basic(j) {
                    self.x[j] = 0.0;
                }
            }
            self.refresh_values();
        }
        self.cost = self.phase2_cost.clone();
        self.refresh_reduced_costs();
        self.primal(deadline)
    }

    /// Re-optimizes after bound changes: dual simplex, then a primal pass
    /// to mop up any dual infeasibility left by round-off.
    pub(crate) fn reoptimize(&mut self, deadline: Option<Instant>) -> LpStatus {
        match self.dual(deadline) {
            LpStatus::Optimal => {}
            other => return other,
        }
        self.refresh_values();
        self.refresh_reduced_costs();
        match self.primal(deadline) {
            LpStatus::Optimal => {
                if self.max_bound_violation() > FEAS_TOL * 10.0 {
                    // Numerical trouble; retry once through the dual.
                    return self.dual(deadline);
                }
                LpStatus::Optimal
            }
            other => other,
        }
    }

    fn max_bound_violation(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| (self.lower[b] - self.x[b]).max(self.x[b] - self.upper[b]))
            .fold(0.0, f64::max)
    }
}

/// Solves the LP relaxation of `model`. Returns the objective in the
/// model's own sense together with the structural values.
#[cfg(test)]
pub(crate) fn solve_relaxation(model: &MilpModel) -> Result<(f64, Vec<f64>), LpStatus> {
    let mut t = Tableau::from_model(model);
    match t.solve_from_scratch(None) {
        LpStatus::Optimal => {
            let obj = model.objective_value(&t.structural_values());
            Ok((obj, t.structural_values()))
        }
        other => Err(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{VarKind, MilpModel};

    #[test]
    fn small_lp() {
        // max 3a + 2b  s.t. a + b <= 4, a + 3b <= 6, a <= 3
        let mut m = MilpModel::new();
        let a = m.add_var("a", VarKind::Continuous, 0.0, 3.0);
        let b = m.add_var("b", VarKind::Continuous, 0.0, f64::INFINITY);
        m.add_constraint("c1", vec![(a, 1.0), (b, 1.0)], Comparator::Le, 4.0);
        m.add_constraint("c2", vec![(a, 1.0), (b, 3.0)], Comparator::Le, 6.0);
        m.set_objective(Sense::Maximize, vec![(a, 3.0), (b, 2.0)]);
        let (obj, x) = solve_relaxation(&m).unwrap();
        assert!((obj - 11.0).abs() < 1e-9, "{obj}");
        assert!((x[0] - 3.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min a + 2b  s.t. a + b = 3, a - b >= 1, b >= 0.5
        let mut m = MilpModel::new();
        let a = m.add_var("a", VarKind::Continuous, 0.0, 10.0);
        let b = m.add_var("b", VarKind::Continuous, 0.5, 10.0);
        m.add_constraint("e", vec![(a, 1.0), (b, 1.0)], Comparator::Eq, 3.0);
        m.add_constraint("g", vec![(a, 1.0), (b, -1.0)], Comparator::Ge, 1.0);
        m.set_objective(Sense::Minimize, vec![(a, 1.0), (b, 2.0)]);
        let (obj, _) = solve_relaxation(&m).unwrap();
        assert!((obj - 3.5).abs() < 1e-9, "{obj}");
    }

    #[test]
    fn detects_infeasible() {
        let mut m = MilpModel::new();
        let a = m.add_var("a", VarKind::Continuous, 0.0, 1.0);
        m.add_constraint("g", vec![(a, 1.0)], Comparator::Ge, 2.0);
        assert_eq!(solve_relaxation(&m).unwrap_err(), LpStatus::Infeasible);
    }

    #[test]
    fn dual_after_bound_change() {
        // min -a - b  s.t. a + b <= 1.5 ; a, b in [0, 1]
        let mut m = MilpModel::new();
        let a = m.add_var("a", VarKind::Continuous, 0.0, 1.0);
        let b = m.add_var("b", VarKind::Continuous, 0.0, 1.0);
        m.add_constraint("c", vec![(a, 1.0), (b, 1.0)], Comparator::Le, 1.5);
        m.set_objective(Sense::Minimize, vec![(a, -1.0), (b, -1.0)]);
        let mut t = Tableau::from_model(&m);
        assert_eq!(t.solve_from_scratch(None), LpStatus::Optimal);
        assert!((t.objective() + 1.5).abs() < 1e-9);
        // Force both to 0.25 or less.
        t.set_bounds(0, 0.0, 0.25);
        t.set_bounds(1, 0.0, 0.25);
        assert_eq!(t.reoptimize(None), LpStatus::Optimal);
        assert!((t.objective() + 0.5).abs() < 1e-9);
        // And now infeasible with a lower bound beyond the row.
        t.set_bounds(0, 1.0, 1.0);
        t.set_bounds(1, 0.0, 1.0);
        assert_eq!(t.reoptimize(None), LpStatus::Optimal);
        t.set_bounds(1, 1.0, 1.0);
        assert_eq!(t.reoptimize(None), LpStatus::Infeasible);
    }
}
