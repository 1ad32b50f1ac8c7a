//! Dense two-phase tableau simplex with Bland's rule. Slow and simple; used
//! only to cross-check the revised simplex in the library.

use elrp::mathprog::{LpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableauResult {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Solves `model` ignoring integrality. Column upper bounds become rows;
/// lower bounds must be zero.
pub fn solve(model: &LpModel) -> TableauResult {
    let n = model.num_columns();
    // Collect rows as dense (coefs, sense, rhs).
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = model
        .rows()
        .iter()
        .map(|r| (vec![0.0; n], r.sense, r.rhs))
        .collect();
    for (j, c) in model.columns().iter().enumerate() {
        assert_eq!(c.lower, 0.0, "tableau oracle expects zero lower bounds");
        for &(i, v) in &c.entries {
            rows[i].0[j] += v;
        }
    }
    for (j, c) in model.columns().iter().enumerate() {
        if c.upper.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Sense::Le, c.upper));
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    // Columns: structural | slacks | artificials | rhs
    let width = n + n_slack + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let mut s = 0;
    for (i, (a, sense, b)) in rows.iter().enumerate() {
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(a);
        match sense {
            Sense::Le => {
                row[n + s] = 1.0;
                s += 1;
            }
            Sense::Ge => {
                row[n + s] = -1.0;
                s += 1;
            }
            Sense::Eq => {}
        }
        row[width - 1] = *b;
        if *b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n + n_slack + i] = 1.0;
        basis[i] = n + n_slack + i;
        t[i] = row;
    }
    let art0 = n + n_slack;

    let mut phase1 = vec![0.0; width];
    for j in art0..art0 + m {
        phase1[j] = 1.0;
    }
    if !run(&mut t, &mut basis, &phase1, width - 1, None) {
        unreachable!("phase one is bounded");
    }
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art0)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    if infeas > 1e-7 {
        return TableauResult::Infeasible;
    }
    // Pivot out zero artificials where possible.
    for i in 0..m {
        if basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut phase2 = vec![0.0; width];
    for (j, c) in model.columns().iter().enumerate() {
        phase2[j] = c.cost;
    }
    if !run(&mut t, &mut basis, &phase2, art0, Some(art0)) {
        return TableauResult::Unbounded;
    }
    let obj: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b < n)
        .map(|(i, &b)| phase2[b] * t[i][width - 1])
        .sum();
    TableauResult::Optimal(obj)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let pr = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && row[c] != 0.0 {
            let f = row[c];
            for (v, pv) in row.iter_mut().zip(&pr) {
                *v -= f * pv;
            }
        }
    }
    basis[r] = c;
}

/// Bland's rule over columns `< limit`; returns false when unbounded.
fn run(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    limit: usize,
    forbid_from: Option<usize>,
) -> bool {
    let m = t.len();
    let width = cost.len();
    loop {
        let mut entering = None;
        for j in 0..limit {
            if forbid_from.is_some_and(|f| j >= f) || basis.contains(&j) {
                continue;
            }
            let mut d = cost[j];
            for i in 0..m {
                d -= cost[basis[i]] * t[i][j];
            }
            if d < -1e-10 {
                entering = Some(j);
                break;
            }
        }
        let Some(c) = entering else { return true };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][c] > 1e-10 {
                let ratio = t[i][width - 1] / t[i][c];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else { return false };
        pivot(t, basis, r, c);
    }
}
