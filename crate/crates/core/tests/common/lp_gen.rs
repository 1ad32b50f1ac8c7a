//! Random LP/IP generators and the independent checks run against them.

use elrp::mathprog::{LpModel, LpSolution, Sense};
use rand::Rng;

/// Feasible, bounded random LP: a random point in the box is made feasible
/// for every row.
pub fn random_lp<R: Rng>(rng: &mut R, rows: usize, cols: usize, integer: bool) -> LpModel {
    let mut m = LpModel::new();
    let x0: Vec<f64> = (0..cols)
        .map(|_| rng.gen_range(0.0..4.0_f64).floor())
        .collect();
    let mut dense = vec![vec![0.0; cols]; rows];
    for row in dense.iter_mut() {
        for v in row.iter_mut() {
            if rng.gen_bool(0.4) {
                *v = rng.gen_range(-5..=5) as f64;
            }
        }
    }
    let mut row_ids = Vec::new();
    for row in dense.iter() {
        let act: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let (sense, rhs) = match rng.gen_range(0..3) {
            0 => (Sense::Le, act + rng.gen_range(0..4) as f64),
            1 => (Sense::Ge, act - rng.gen_range(0..4) as f64),
            _ => (Sense::Eq, act),
        };
        row_ids.push(m.add_row(format!("r{}", row_ids.len()), sense, rhs));
    }
    for j in 0..cols {
        let entries: Vec<_> = (0..rows)
            .filter(|&i| dense[i][j] != 0.0)
            .map(|i| (row_ids[i], dense[i][j]))
            .collect();
        let upper = x0[j] + rng.gen_range(1..5) as f64;
        let cost = rng.gen_range(-10..=10) as f64;
        m.add_column(format!("x{j}"), 0.0, upper, cost, integer, &entries);
    }
    m
}

/// Lagrangian dual value of `sol.duals` on `model`, or `None` when the
/// duals have the wrong sign for some row or unbounded column.
pub fn dual_objective(model: &LpModel, sol: &LpSolution) -> Option<f64> {
    let mut value = 0.0;
    for (i, r) in model.rows().iter().enumerate() {
        let y = sol.duals[i];
        match r.sense {
            Sense::Le if y > 1e-9 => return None,
            Sense::Ge if y < -1e-9 => return None,
            _ => {}
        }
        value += y * r.rhs;
    }
    for c in model.columns() {
        let mut d = c.cost;
        for &(i, v) in &c.entries {
            d -= sol.duals[i] * v;
        }
        if d >= 0.0 {
            value += d * c.lower;
        } else if c.upper.is_finite() {
            value += d * c.upper;
        } else if d < -1e-9 {
            return None;
        }
    }
    Some(value)
}

pub fn max_violation(model: &LpModel, x: &[f64]) -> f64 {
    let act = model.row_activity(x);
    let mut worst: f64 = 0.0;
    for (r, a) in model.rows().iter().zip(act) {
        let v = match r.sense {
            Sense::Le => a - r.rhs,
            Sense::Ge => r.rhs - a,
            Sense::Eq => (a - r.rhs).abs(),
        };
        worst = worst.max(v);
    }
    for (c, v) in model.columns().iter().zip(x) {
        worst = worst.max(c.lower - v).max(v - c.upper);
    }
    worst
}

/// Exhaustive minimum over the integer lattice of a bounded pure IP.
pub fn enumerate_ip(model: &LpModel) -> Option<f64> {
    let cols = model.columns();
    let mut x: Vec<f64> = cols.iter().map(|c| c.lower).collect();
    let mut best: Option<f64> = None;
    loop {
        if max_violation(model, &x) <= 1e-9 {
            let obj = model.objective_value(&x);
            if best.is_none_or(|b| obj < b) {
                best = Some(obj);
            }
        }
        let mut j = 0;
        loop {
            if j == cols.len() {
                return best;
            }
            if x[j] + 1.0 <= cols[j].upper + 1e-9 {
                x[j] += 1.0;
                break;
            }
            x[j] = cols[j].lower;
            j += 1;
        }
    }
}

/// Random pure IP small enough to enumerate: every column has upper bound
/// 1 or 2 and a known feasible point.
pub fn random_small_ip<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> LpModel {
    let mut m = LpModel::new();
    let upper: Vec<f64> = (0..cols)
        .map(|_| if rng.gen_bool(0.8) { 1.0 } else { 2.0 })
        .collect();
    let x0: Vec<f64> = upper
        .iter()
        .map(|&u| rng.gen_range(0..=u as i32) as f64)
        .collect();
    let dense: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        rng.gen_range(-6..=6) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut row_ids = Vec::new();
    for (i, row) in dense.iter().enumerate() {
        let act: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let (sense, rhs) = match rng.gen_range(0..4) {
            0 | 1 => (Sense::Le, act + rng.gen_range(0..3) as f64),
            2 => (Sense::Ge, act - rng.gen_range(0..3) as f64),
            _ => (Sense::Eq, act),
        };
        row_ids.push(m.add_row(format!("r{i}"), sense, rhs));
    }
    for j in 0..cols {
        let entries: Vec<_> = (0..rows)
            .filter(|&i| dense[i][j] != 0.0)
            .map(|i| (row_ids[i], dense[i][j]))
            .collect();
        m.add_column(
            format!("x{j}"),
            0.0,
            upper[j],
            rng.gen_range(-10..=10) as f64,
            true,
            &entries,
        );
    }
    m
}
