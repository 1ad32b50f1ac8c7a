//! Bounded revised simplex with a dense basis inverse.
//!
//! Every row `i` gets a logical column `r_i` (`a_i x + r_i = b_i`) whose
//! bounds encode the row sense, plus an artificial column used only in
//! phase one. Nonbasic columns sit at one of their bounds.

use super::{LpError, LpModel, LpSolution, LpStatus, Sense, FEAS_TOL, OPT_TOL};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const BLAND_AFTER_DEGENERATE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// The model in computational form, shared across branch-and-bound nodes.
pub(crate) struct StandardForm {
    m: usize,
    n: usize,
    /// Sparse columns of all `n + 2m` variables.
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    cost_scale: f64,
}

impl StandardForm {
    pub(crate) fn new(model: &LpModel) -> Self {
        let m = model.num_rows();
        let n = model.num_columns();
        let total = n + 2 * m;
        let mut cols = Vec::with_capacity(total);
        let mut cost = Vec::with_capacity(total);
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        for c in model.columns() {
            cols.push(c.entries.clone());
            cost.push(c.cost);
            lower.push(c.lower);
            upper.push(c.upper);
        }
        for (i, r) in model.rows().iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            cost.push(0.0);
            let (l, u) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        for i in 0..m {
            // Sign fixed at start-up of each solve.
            cols.push(vec![(i, 1.0)]);
            cost.push(0.0);
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }
        let cost_scale = model
            .columns()
            .iter()
            .map(|c| c.cost.abs())
            .fold(1.0_f64, f64::max);
        StandardForm {
            m,
            n,
            cols,
            cost,
            lower,
            upper,
            rhs: model.rows().iter().map(|r| r.rhs).collect(),
            cost_scale,
        }
    }

    /// Solves with the structural bounds replaced by `lower`/`upper`.
    pub(crate) fn solve_with_bounds(
        &self,
        lower: &[f64],
        upper: &[f64],
    ) -> Result<LpSolution, LpError> {
        let mut s = Simplex::new(self, lower, upper);
        s.run()
    }

    pub(crate) fn structural_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower[..self.n].to_vec(), self.upper[..self.n].to_vec())
    }
}

/// Solves the LP relaxation of `model` (integrality flags are ignored).
pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    model.validate()?;
    let sf = StandardForm::new(model);
    let (l, u) = sf.structural_bounds();
    sf.solve_with_bounds(&l, &u)
}

struct Simplex<'a> {
    sf: &'a StandardForm,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(sf: &'a StandardForm, lower: &[f64], upper: &[f64]) -> Self {
        let m = sf.m;
        let n = sf.n;
        let total = n + 2 * m;
        let mut lo = sf.lower.clone();
        let mut up = sf.upper.clone();
        lo[..n].copy_from_slice(lower);
        up[..n].copy_from_slice(upper);
        let mut x = vec![0.0; total];
        let mut state = vec![VarState::AtLower; total];
        for j in 0..n + m {
            if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = VarState::AtLower;
            } else if up[j].is_finite() {
                x[j] = up[j];
                state[j] = VarState::AtUpper;
            } else {
                x[j] = 0.0;
                state[j] = VarState::AtLower;
            }
        }
        let mut residual = sf.rhs.clone();
        for j in 0..n + m {
            if x[j] != 0.0 {
                for &(i, v) in &sf.cols[j] {
                    residual[i] -= v * x[j];
                }
            }
        }
        let mut cols = sf.cols.clone();
        let mut binv = vec![0.0; m * m];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let a = n + m + i;
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            cols[a] = vec![(i, sign)];
            x[a] = residual[i].abs();
            state[a] = VarState::Basic;
            basis.push(a);
            binv[i * m + i] = sign;
        }
        let max_iterations = 20_000 + 50 * (total + m);
        Simplex {
            sf,
            cols,
            lower: lo,
            upper: up,
            cost: vec![0.0; total],
            x,
            state,
            basis,
            binv,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
            max_iterations,
        }
    }

    fn m(&self) -> usize {
        self.sf.m
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        let m = self.m();
        let n = self.sf.n;
        let art0 = n + m;

        // Phase one: drive the artificials to zero.
        if m > 0 {
            for j in art0..art0 + m {
                self.cost[j] = 1.0;
            }
            self.iterate(1.0)?;
            let infeas: f64 = (art0..art0 + m).map(|j| self.x[j]).sum();
            let rhs_scale = self.sf.rhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if infeas > 1e-7 * rhs_scale {
                let mut sol = LpSolution::with_status(LpStatus::Infeasible, n, m);
                sol.iterations = self.iterations;
                return Ok(sol);
            }
            for j in art0..art0 + m {
                self.cost[j] = 0.0;
                self.upper[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = VarState::AtLower;
                }
            }
            self.drive_out_artificials();
            self.refactor()?;
        }

        self.cost[..n].copy_from_slice(&self.sf.cost[..n]);
        self.bland = false;
        self.degenerate_run = 0;
        match self.iterate(self.sf.cost_scale)? {
            Outcome::Unbounded => {
                let mut sol = LpSolution::with_status(LpStatus::Unbounded, n, m);
                sol.iterations = self.iterations;
                Ok(sol)
            }
            Outcome::Optimal => {
                self.refactor()?;
                Ok(self.extract())
            }
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = self.cost[bj];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for k in 0..m {
                    y[k] += cb * row[k];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        for &(i, v) in &self.cols[j] {
            d -= y[i] * v;
        }
        d
    }

    fn column_in_basis(&self, j: usize) -> Vec<f64> {
        let m = self.m();
        let mut alpha = vec![0.0; m];
        for &(i, v) in &self.cols[j] {
            for r in 0..m {
                alpha[r] += self.binv[r * m + i] * v;
            }
        }
        alpha
    }

    fn iterate(&mut self, cost_scale: f64) -> Result<Outcome, LpError> {
        let opt_tol = OPT_TOL * cost_scale.max(1.0);
        let m = self.m();
        let total = self.cols.len();
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::Numerical {
                    iterations: self.iterations,
                });
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..total {
                if self.state[j] == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let can_inc = self.state[j] == VarState::AtLower || self.lower[j].is_infinite();
                let can_dec = self.state[j] == VarState::AtUpper || self.upper[j].is_infinite();
                let score = if d < -opt_tol && can_inc && self.x[j] < self.upper[j] {
                    -d
                } else if d > opt_tol && can_dec && self.x[j] > self.lower[j] {
                    d
                } else {
                    continue;
                };
                if self.bland {
                    entering = Some((j, d));
                    break;
                }
                if score > best {
                    best = score;
                    entering = Some((j, d));
                }
            }
            let Some((q, dq)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.column_in_basis(q);

            // Ratio test. The entering column's own bound range caps the step.
            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<usize> = None;
            let mut leave_piv = 0.0;
            for r in 0..m {
                let a = alpha[r];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let bj = self.basis[r];
                // x_B[r] moves by -dir * a per unit step.
                let rate = -dir * a;
                let limit = if rate < 0.0 {
                    if self.lower[bj].is_finite() {
                        ((self.x[bj] - self.lower[bj]) / -rate).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.upper[bj].is_finite() {
                    ((self.upper[bj] - self.x[bj]) / rate).max(0.0)
                } else {
                    continue;
                };
                let better = if limit < theta - 1e-12 {
                    true
                } else if limit <= theta + 1e-12 && leave.is_some() {
                    if self.bland {
                        bj < self.basis[leave.unwrap()]
                    } else {
                        a.abs() > leave_piv
                    }
                } else {
                    false
                };
                if better {
                    theta = limit;
                    leave = Some(r);
                    leave_piv = a.abs();
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            if theta < 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= BLAND_AFTER_DEGENERATE {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }

            self.x[q] += dir * theta;
            for r in 0..m {
                if alpha[r] != 0.0 {
                    let bj = self.basis[r];
                    self.x[bj] -= dir * theta * alpha[r];
                }
            }

            match leave {
                None => {
                    // Bound flip.
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = VarState::AtUpper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = VarState::AtLower;
                    }
                }
                Some(r) => {
                    let bj = self.basis[r];
                    let rate = -dir * alpha[r];
                    if rate < 0.0 {
                        self.x[bj] = self.lower[bj];
                        self.state[bj] = VarState::AtLower;
                    } else {
                        self.x[bj] = self.upper[bj];
                        self.state[bj] = VarState::AtUpper;
                    }
                    self.state[q] = VarState::Basic;
                    self.basis[r] = q;
                    self.pivot(r, &alpha);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m();
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for (i, a) in alpha.iter().enumerate() {
            if i == r || *a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut before[i * m..(i + 1) * m]
            } else {
                let off = (i - r - 1) * m;
                &mut after[off..off + m]
            };
            for k in 0..m {
                row[k] -= a * pivot_row[k];
            }
        }
        self.since_refactor += 1;
    }

    /// Recomputes the basis inverse from scratch and the basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m();
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m];
        for (r, &bj) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[bj] {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut piv = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(LpError::Numerical {
                    iterations: self.iterations,
                });
            }
            if piv != c {
                for k in 0..m {
                    a.swap(c * m + k, piv * m + k);
                    inv.swap(c * m + k, piv * m + k);
                }
            }
            let p = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= p;
                inv[c * m + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[c * m + k];
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;

        let mut residual = self.sf.rhs.clone();
        for j in 0..self.cols.len() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for &(i, v) in &self.cols[j] {
                    residual[i] -= v * self.x[j];
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let v: f64 = row.iter().zip(&residual).map(|(a, b)| a * b).sum();
            self.x[self.basis[r]] = v;
        }
        Ok(())
    }

    /// Pivots zero-valued artificials out of the basis where possible; rows
    /// where no pivot exists are redundant and keep a fixed artificial.
    fn drive_out_artificials(&mut self) {
        let m = self.m();
        let n = self.sf.n;
        let art0 = n + m;
        for r in 0..m {
            if self.basis[r] < art0 {
                continue;
            }
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut found = None;
            for j in 0..art0 {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let a: f64 = self.cols[j].iter().map(|&(i, v)| row[i] * v).sum();
                if a.abs() > 1e-7 {
                    found = Some(j);
                    break;
                }
            }
            if let Some(q) = found {
                let alpha = self.column_in_basis(q);
                let leaving = self.basis[r];
                self.x[leaving] = 0.0;
                self.state[leaving] = VarState::AtLower;
                self.state[q] = VarState::Basic;
                self.basis[r] = q;
                self.pivot(r, &alpha);
            }
        }
    }

    fn extract(&self) -> LpSolution {
        let m = self.m();
        let n = self.sf.n;
        let y = self.duals();
        let primal: Vec<f64> = self.x[..n].to_vec();
        let reduced_costs: Vec<f64> = (0..n).map(|j| self.reduced_cost(j, &y)).collect();
        let objective: f64 = (0..n).map(|j| self.sf.cost[j] * primal[j]).sum();

        // Residual artificial mass means the factorization drifted.
        let art_sum: f64 = (n + m..n + 2 * m).map(|j| self.x[j].abs()).sum();
        if art_sum > FEAS_TOL * 10.0 {
            log::warn!("simplex: residual artificial mass {art_sum:.3e} at optimum");
        }

        LpSolution {
            status: LpStatus::Optimal,
            objective,
            primal,
            duals: y,
            reduced_costs,
            iterations: self.iterations,
            nodes: 0,
            bound: objective,
        }
    }
}
