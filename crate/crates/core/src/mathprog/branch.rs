//! Branch-and-bound over the simplex engine: depth-first until the first
//! incumbent, best-bound afterwards.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::StandardForm;
use super::{LpError, LpModel, LpSolution, LpStatus, INT_TOL};

pub const DEFAULT_MILP_GAP: f64 = 1e-6;
const NODE_LIMIT: usize = 200_000;

struct Node {
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn most_fractional(model: &LpModel, x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, i32, f64)> = None;
    for (j, c) in model.columns().iter().enumerate() {
        if !c.integer {
            continue;
        }
        let frac = x[j] - x[j].floor();
        if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
            continue;
        }
        let dist = (frac - 0.5).abs();
        let better =
            best.is_none_or(|(_, p, d)| c.priority > p || (c.priority == p && dist < d - 1e-12));
        if better {
            best = Some((j, c.priority, dist));
        }
    }
    best.map(|(j, _, _)| j)
}

fn gap_closed(incumbent: f64, bound: f64, gap: f64) -> bool {
    incumbent - bound <= gap * incumbent.abs().max(1.0)
}

/// Minimizes `model` with integrality enforced on its integer columns.
///
/// Branches on the most fractional column of highest priority. Dives
/// depth-first, rounding up first, until an integer solution is found, then
/// explores nodes in best-bound order. The returned `bound` is the best proven lower bound.
pub fn solve_milp(model: &LpModel, gap: f64) -> Result<LpSolution, LpError> {
    model.validate()?;
    let sf = StandardForm::new(model);
    let (lower, upper) = sf.structural_bounds();
    let root = sf.solve_with_bounds(&lower, &upper)?;
    match root.status {
        LpStatus::Optimal => {}
        _ => return Ok(root),
    }
    let root_obj = root.objective;
    let mut incumbent: Option<LpSolution> = None;
    let mut iterations = root.iterations;
    let mut nodes = 1usize;
    let mut next_id = 1usize;

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut dive: Vec<Node> = Vec::new();
    let mut pending = Some((root, lower, upper));
    let mut best_bound = root_obj;

    loop {
        let (sol, lo, up) = match pending.take() {
            Some(p) => p,
            None => {
                let node = if let Some(node) = dive.pop() {
                    node
                } else {
                    let Some(node) = heap.pop() else { break };
                    best_bound = node.bound;
                    node
                };
                if let Some(inc) = &incumbent {
                    if gap_closed(inc.objective, node.bound, gap) {
                        heap.clear();
                        break;
                    }
                }
                nodes += 1;
                if nodes > NODE_LIMIT {
                    return Err(LpError::NodeLimit { nodes });
                }
                let sol = sf.solve_with_bounds(&node.lower, &node.upper)?;
                iterations += sol.iterations;
                (sol, node.lower, node.upper)
            }
        };
        if sol.status != LpStatus::Optimal {
            continue;
        }
        if let Some(inc) = &incumbent {
            if gap_closed(inc.objective, sol.objective, gap) {
                continue;
            }
        }
        match most_fractional(model, &sol.primal) {
            None => {
                let better = incumbent
                    .as_ref()
                    .is_none_or(|inc| sol.objective < inc.objective - 1e-12);
                if better {
                    incumbent = Some(sol);
                    heap.extend(dive.drain(..));
                }
            }
            Some(j) => {
                let v = sol.primal[j];
                let mut up_lower = lo.clone();
                up_lower[j] = v.ceil();
                let mut down_upper = up.clone();
                down_upper[j] = v.floor();
                let down = Node {
                    bound: sol.objective,
                    id: next_id,
                    lower: lo,
                    upper: down_upper,
                };
                let up = Node {
                    bound: sol.objective,
                    id: next_id + 1,
                    lower: up_lower,
                    upper: up,
                };
                next_id += 2;
                if incumbent.is_none() {
                    dive.push(down);
                    dive.push(up);
                } else {
                    heap.push(down);
                    heap.push(up);
                }
            }
        }
    }

    match incumbent {
        None => {
            let mut s = LpSolution::with_status(
                LpStatus::Infeasible,
                model.num_columns(),
                model.num_rows(),
            );
            s.iterations = iterations;
            s.nodes = nodes;
            Ok(s)
        }
        Some(mut inc) => {
            // Snap integer columns onto the lattice.
            for (j, c) in model.columns().iter().enumerate() {
                if c.integer {
                    inc.primal[j] = inc.primal[j].round();
                }
            }
            inc.objective = model.objective_value(&inc.primal);
            inc.bound = best_bound.min(inc.objective).max(root_obj);
            debug_assert!(inc.objective >= root_obj - 1e-6 * root_obj.abs().max(1.0));
            inc.iterations = iterations;
            inc.nodes = nodes;
            Ok(inc)
        }
    }
}
