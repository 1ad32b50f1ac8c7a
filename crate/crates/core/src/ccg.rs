//! Column-and-constraint generation for the optimistic bilevel problem.
//!
//! The leader master proposes station sizes; the follower's best response
//! to them gives an upper bound and a new scenario cut.

use std::fmt::Write as _;

use thiserror::Error;

use crate::colgen::{
    solve_master, ColgenError, ColgenOptions, ColumnPool, IntegerSolution, IterationLog,
    MasterSpec, ScenarioCut,
};
use crate::evaluate::{fo_cost, FleetPlan, LeaderDecision};
use crate::pten::PtenGraph;

#[derive(Debug, Error)]
pub enum CcgError {
    #[error("no leader decision admits a feasible fleet plan")]
    Infeasible,
    #[error("bilevel loop stopped after {iterations} iterations with gap {gap}")]
    IterationLimit { iterations: usize, gap: f64 },
    #[error(transparent)]
    Colgen(#[from] ColgenError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcgOptions {
    /// Relative optimality tolerance on the leader objective.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub colgen: ColgenOptions,
}

impl Default for CcgOptions {
    fn default() -> Self {
        CcgOptions {
            epsilon: 1e-4,
            max_iterations: 50,
            colgen: ColgenOptions::default(),
        }
    }
}

/// A stored follower response.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub plan: FleetPlan,
    pub fo_cost: f64,
}

impl Scenario {
    pub fn new(plan: FleetPlan) -> Self {
        let fo_cost = fo_cost(&plan);
        Scenario { plan, fo_cost }
    }

    /// Peak simultaneous charges per station.
    pub fn station_load(&self, graph: &PtenGraph) -> Vec<u32> {
        let mut load = vec![0u32; graph.instance().num_stations()];
        for (slot, n) in self.plan.usage() {
            load[slot.station] = load[slot.station].max(n);
        }
        load
    }

    pub fn cut(&self, graph: &PtenGraph) -> ScenarioCut {
        ScenarioCut {
            fo_cost: self.fo_cost,
            station_load: self.station_load(graph),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcgIteration {
    pub iter: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub n_scenarios: usize,
    pub sp2_feasible: bool,
}

/// Follower response to one leader decision.
#[derive(Debug, Clone)]
pub struct FollowerResponse {
    /// Cheapest follower plan.
    pub cheapest: FleetPlan,
    /// Optimal follower cost.
    pub theta: f64,
    /// Leader-preferred plan among the follower-optimal ones.
    pub optimistic: Option<FleetPlan>,
    /// Leader cost of the optimistic plan.
    pub leader_cost: f64,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct BilevelSolution {
    pub decision: LeaderDecision,
    pub plan: FleetPlan,
    pub follower_cost: f64,
    pub leader_cost: f64,
    pub lower_bound: f64,
    pub iterations: Vec<CcgIteration>,
    /// Column generation logs of every subproblem, in solve order.
    pub colgen_logs: Vec<(String, Vec<IterationLog>)>,
    /// False when some subproblem could not be certified optimal.
    pub exact: bool,
}

/// Leader master over the stored scenarios.
pub fn solve_sp0(
    graph: &PtenGraph,
    scenarios: &[Scenario],
    pool: &mut ColumnPool,
    opts: &ColgenOptions,
) -> Result<(IntegerSolution, Vec<IterationLog>), ColgenError> {
    let cuts = scenarios.iter().map(|s| s.cut(graph)).collect();
    let (int, lp) = solve_master(graph, &MasterSpec::leader(cuts), pool, opts)?;
    Ok((int, lp.log))
}

/// Follower best response; the pool keeps every follower-optimal route.
pub fn solve_sp1(
    graph: &PtenGraph,
    decision: &LeaderDecision,
    pool: &mut ColumnPool,
    opts: &ColgenOptions,
) -> Result<(IntegerSolution, Vec<IterationLog>), ColgenError> {
    let (int, lp) = solve_master(graph, &MasterSpec::follower(decision.clone()), pool, opts)?;
    Ok((int, lp.log))
}

/// Leader-optimistic selection among follower plans costing at most `theta`.
pub fn solve_sp2(
    graph: &PtenGraph,
    decision: &LeaderDecision,
    theta: f64,
    pool: &mut ColumnPool,
    opts: &ColgenOptions,
) -> Result<(IntegerSolution, Vec<IterationLog>), ColgenError> {
    let (int, lp) = solve_master(
        graph,
        &MasterSpec::follower_check(decision.clone(), theta),
        pool,
        opts,
    )?;
    Ok((int, lp.log))
}

/// Optimistic follower response to `decision`.
pub fn follower_response(
    graph: &PtenGraph,
    decision: &LeaderDecision,
    opts: &ColgenOptions,
) -> Result<FollowerResponse, ColgenError> {
    let mut pool = ColumnPool::new();
    let (sp1, _) = solve_sp1(graph, decision, &mut pool, opts)?;
    let capex = decision.capex(graph.instance());
    match solve_sp2(graph, decision, sp1.objective, &mut pool, opts) {
        Ok((sp2, _)) => Ok(FollowerResponse {
            leader_cost: capex - sp2.plan.revenue(),
            theta: sp1.objective,
            cheapest: sp1.plan,
            optimistic: Some(sp2.plan),
            exact: sp1.exact && sp2.exact,
        }),
        Err(ColgenError::Infeasible) => Ok(FollowerResponse {
            leader_cost: capex - sp1.plan.revenue(),
            theta: sp1.objective,
            cheapest: sp1.plan,
            optimistic: None,
            exact: false,
        }),
        Err(e) => Err(e),
    }
}

/// Tolerance on `UB - LB` used by [`run_ccg`].
pub fn stopping_tolerance(epsilon: f64, upper_bound: f64) -> f64 {
    epsilon * upper_bound.abs().max(1.0)
}

/// Solves the bilevel problem by alternating leader master and follower
/// response until the bounds meet.
pub fn run_ccg(graph: &PtenGraph, opts: &CcgOptions) -> Result<BilevelSolution, CcgError> {
    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut leader_pool = ColumnPool::new();
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut incumbent: Option<(LeaderDecision, FleetPlan, f64)> = None;
    let mut iterations = Vec::new();
    let mut logs = Vec::new();
    let mut exact = true;

    for iter in 1..=opts.max_iterations {
        let (sp0, log0) = match solve_sp0(graph, &scenarios, &mut leader_pool, &opts.colgen) {
            Ok(r) => r,
            Err(ColgenError::Infeasible) => return Err(CcgError::Infeasible),
            Err(e) => return Err(e.into()),
        };
        logs.push((format!("sp0_{iter}"), log0));
        let bound = if sp0.exact {
            sp0.objective
        } else {
            sp0.lp_bound
        };
        exact &= sp0.exact;
        lb = lb.max(bound);
        let decision = sp0.decision;

        let mut pool = ColumnPool::new();
        let (sp1, log1) = match solve_sp1(graph, &decision, &mut pool, &opts.colgen) {
            Ok(r) => r,
            Err(ColgenError::Infeasible) => {
                // The proposed stations cannot serve every customer.
                log::warn!(
                    "leader decision without feasible follower response at iteration {iter}"
                );
                return Err(CcgError::Infeasible);
            }
            Err(e) => return Err(e.into()),
        };
        logs.push((format!("sp1_{iter}"), log1));
        exact &= sp1.exact;
        let theta = sp1.objective;
        let capex = decision.capex(graph.instance());

        let sp2 = match solve_sp2(graph, &decision, theta, &mut pool, &opts.colgen) {
            Ok((sp2, log2)) => {
                logs.push((format!("sp2_{iter}"), log2));
                exact &= sp2.exact;
                Some(sp2)
            }
            Err(ColgenError::Infeasible) => None,
            Err(e) => return Err(e.into()),
        };
        let sp2_feasible = sp2.is_some();
        let response = match sp2 {
            Some(s) => s.plan,
            None => sp1.plan,
        };
        let value = capex - response.revenue();
        if value < ub {
            ub = value;
            incumbent = Some((decision.clone(), response.clone(), theta));
        }
        // The response is feasible for the leader master under its own
        // decision, so keeping its routes guarantees an integer solution.
        for r in &response.routes {
            leader_pool.insert(r.clone());
        }
        scenarios.push(Scenario::new(response));

        let gap = ub - lb;
        iterations.push(CcgIteration {
            iter,
            lower_bound: lb,
            upper_bound: ub,
            gap,
            n_scenarios: scenarios.len(),
            sp2_feasible,
        });
        log::info!("ccg iter {iter}: lb {lb:.6} ub {ub:.6} gap {gap:.6}");
        if gap <= stopping_tolerance(opts.epsilon, ub) {
            let (decision, plan, follower_cost) =
                incumbent.expect("upper bound comes from an incumbent");
            return Ok(BilevelSolution {
                decision,
                plan,
                follower_cost,
                leader_cost: ub,
                lower_bound: lb,
                iterations,
                colgen_logs: logs,
                exact,
            });
        }
    }
    Err(CcgError::IterationLimit {
        iterations: opts.max_iterations,
        gap: ub - lb,
    })
}

/// Bound history as CSV: `iter,lb,ub,gap,n_scenarios,sp2_feasible`.
pub fn ccg_csv(iterations: &[CcgIteration]) -> String {
    let mut s = String::from("iter,lb,ub,gap,n_scenarios,sp2_feasible\n");
    for it in iterations {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{:.6},{},{}",
            it.iter, it.lower_bound, it.upper_bound, it.gap, it.n_scenarios, it.sp2_feasible
        );
    }
    s
}
