//! Brute-force reference solvers for small instances.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::evaluate::{apply_ports, ChargeSlot, FleetPlan, LeaderDecision, Route, RouteSimulator};
use crate::instance::{Instance, NodeKind};
use crate::pten::{NodeId, PtenGraph, DEPOT, SINK};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no feasible fleet plan")]
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationBudget {
    pub max_customers: usize,
    pub max_routes: usize,
    pub max_plans: usize,
    pub max_leader_points: usize,
    pub timeout: Duration,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_customers: 6,
            max_routes: 2_000_000,
            max_plans: 50_000_000,
            max_leader_points: 256,
            timeout: Duration::from_secs(600),
        }
    }
}

/// Every feasible route of vehicle type `vehicle`, charging on port 1 only.
pub fn enumerate_routes(
    graph: &PtenGraph,
    vehicle: usize,
    budget: &EnumerationBudget,
) -> Result<Vec<Route>, OracleError> {
    let inst = graph.instance();
    if inst.num_customers() > budget.max_customers {
        return Err(OracleError::BudgetExceeded(format!(
            "{} customers, budget {}",
            inst.num_customers(),
            budget.max_customers
        )));
    }
    let deadline = Instant::now() + budget.timeout;
    let sim = RouteSimulator::new(graph, vehicle)
        .map_err(|e| OracleError::BudgetExceeded(e.to_string()))?;
    let mut out = Vec::new();
    dfs(graph, sim, budget, deadline, &mut out)?;
    Ok(out)
}

fn dfs<'g>(
    graph: &'g PtenGraph,
    sim: RouteSimulator<'g>,
    budget: &EnumerationBudget,
    deadline: Instant,
    out: &mut Vec<Route>,
) -> Result<(), OracleError> {
    let here = sim.last().node;
    for &a in graph.out_arcs(here) {
        let to = graph.arc(a).to;
        if to == DEPOT {
            continue;
        }
        if let NodeKind::StationDummy { port, .. } = graph.kind(to) {
            if port != 1 {
                continue;
            }
        }
        let mut next = sim.clone();
        if next.step(to).is_err() {
            continue;
        }
        if to == SINK {
            if let Ok(route) = next.finish() {
                out.push(route);
                if out.len() > budget.max_routes {
                    return Err(OracleError::BudgetExceeded(format!(
                        "more than {} routes",
                        budget.max_routes
                    )));
                }
                if Instant::now() > deadline {
                    return Err(OracleError::BudgetExceeded("timeout".into()));
                }
            }
        } else {
            dfs(graph, next, budget, deadline, out)?;
        }
    }
    Ok(())
}

/// All routes of every vehicle type.
pub fn enumerate_all(
    graph: &PtenGraph,
    budget: &EnumerationBudget,
) -> Result<Vec<Route>, OracleError> {
    let mut all = Vec::new();
    for k in 0..graph.instance().vehicle_types().len() {
        all.extend(enumerate_routes(graph, k, budget)?);
    }
    Ok(all)
}

const TIE: f64 = 1e-6;

struct Candidate<'r> {
    route: &'r Route,
    usage: Vec<(usize, usize)>,
}

struct Search<'r> {
    masks: Vec<Vec<Candidate<'r>>>,
    lb: Vec<f64>,
    full: u64,
    ports: Vec<u32>,
    horizon: usize,
}

struct Counter {
    plans: usize,
    max: usize,
}

impl Counter {
    fn tick(&mut self) -> Result<(), OracleError> {
        self.plans += 1;
        if self.plans > self.max {
            return Err(OracleError::BudgetExceeded("fleet plan search".into()));
        }
        Ok(())
    }
}

impl<'r> Search<'r> {
    fn new(
        instance: &Instance,
        routes: &'r [Route],
        decision: &LeaderDecision,
        slack: f64,
    ) -> Self {
        let n = instance.num_customers();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let size = 1usize << n;
        let horizon = instance.horizon() as usize;
        let usable = |r: &Route| {
            r.charging
                .iter()
                .all(|c| decision.build[c.station] && decision.ports[c.station] >= 1)
        };

        let mut cheapest_plain = vec![f64::INFINITY; size];
        let mut best = vec![f64::INFINITY; size];
        for r in routes.iter().filter(|r| usable(r)) {
            let m = r.customers as usize;
            best[m] = best[m].min(r.cost);
            if r.charging.is_empty() {
                cheapest_plain[m] = cheapest_plain[m].min(r.cost);
            }
        }

        // One route per (mask, charging pattern): the cheapest.
        let mut keep: BTreeMap<(u64, Vec<ChargeSlot>), &Route> = BTreeMap::new();
        for r in routes.iter().filter(|r| usable(r)) {
            let m = r.customers as usize;
            if !r.charging.is_empty() && r.cost > cheapest_plain[m] + slack {
                continue;
            }
            let mut pattern = r.charging.clone();
            pattern.sort();
            let e = keep.entry((r.customers, pattern)).or_insert(r);
            if r.cost < e.cost || (r.cost == e.cost && r.signature() < e.signature()) {
                *e = r;
            }
        }
        let mut masks: Vec<Vec<Candidate>> = (0..size).map(|_| Vec::new()).collect();
        for ((m, pattern), r) in keep {
            masks[m as usize].push(Candidate {
                route: r,
                usage: pattern.iter().map(|c| (c.station, c.t as usize)).collect(),
            });
        }
        for list in masks.iter_mut() {
            list.sort_by(|a, b| {
                a.route
                    .cost
                    .total_cmp(&b.route.cost)
                    .then_with(|| a.route.signature().cmp(&b.route.signature()))
            });
        }

        // Partition lower bound ignoring port capacity.
        let mut lb = vec![f64::INFINITY; size];
        lb[0] = 0.0;
        for m in 1..size {
            let low = m & m.wrapping_neg();
            let mut sub = m;
            while sub > 0 {
                if sub & low != 0 && best[sub].is_finite() {
                    lb[m] = lb[m].min(best[sub] + lb[m ^ sub]);
                }
                sub = (sub - 1) & m;
            }
        }
        Search {
            masks,
            lb,
            full,
            ports: decision.ports.clone(),
            horizon,
        }
    }

    fn fits(&self, used: &[u32], c: &Candidate) -> bool {
        c.usage
            .iter()
            .all(|&(s, t)| used[s * self.horizon + t] < self.ports[s])
    }

    fn apply(&self, used: &mut [u32], c: &Candidate, add: bool) {
        for &(s, t) in &c.usage {
            let cell = &mut used[s * self.horizon + t];
            if add {
                *cell += 1;
            } else {
                *cell -= 1;
            }
        }
    }

    fn candidates(&self, remaining: u64) -> impl Iterator<Item = (u64, &Candidate<'r>)> + '_ {
        let low = remaining & remaining.wrapping_neg();
        let rem = remaining;
        SubmaskIter::new(rem)
            .filter(move |&m| m & low != 0)
            .flat_map(move |m| self.masks[m as usize].iter().map(move |c| (m, c)))
    }

    fn min_cost(
        &self,
        counter: &mut Counter,
        remaining: u64,
        cost: f64,
        used: &mut Vec<u32>,
        chosen: &mut Vec<&'r Route>,
        best: &mut Option<(f64, Vec<&'r Route>)>,
    ) -> Result<(), OracleError> {
        if remaining == 0 {
            if best.as_ref().is_none_or(|(b, _)| cost < *b - 1e-9) {
                *best = Some((cost, chosen.clone()));
            }
            return Ok(());
        }
        counter.tick()?;
        for (m, c) in self.candidates(remaining) {
            let rest = remaining & !m;
            let bound = cost + c.route.cost + self.lb[rest as usize];
            if best.as_ref().is_some_and(|(b, _)| bound >= *b - 1e-9) {
                continue;
            }
            if !self.fits(used, c) {
                continue;
            }
            self.apply(used, c, true);
            chosen.push(c.route);
            self.min_cost(counter, rest, cost + c.route.cost, used, chosen, best)?;
            chosen.pop();
            self.apply(used, c, false);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn max_revenue(
        &self,
        counter: &mut Counter,
        remaining: u64,
        cost: f64,
        revenue: f64,
        cap: f64,
        used: &mut Vec<u32>,
        chosen: &mut Vec<&'r Route>,
        best: &mut Option<(f64, f64, Vec<&'r Route>)>,
    ) -> Result<(), OracleError> {
        if remaining == 0 {
            if best.as_ref().is_none_or(|(_, r, _)| revenue > *r + 1e-9) {
                *best = Some((cost, revenue, chosen.clone()));
            }
            return Ok(());
        }
        counter.tick()?;
        for (m, c) in self.candidates(remaining) {
            let rest = remaining & !m;
            if cost + c.route.cost + self.lb[rest as usize] > cap {
                continue;
            }
            if !self.fits(used, c) {
                continue;
            }
            self.apply(used, c, true);
            chosen.push(c.route);
            self.max_revenue(
                counter,
                rest,
                cost + c.route.cost,
                revenue + c.route.revenue,
                cap,
                used,
                chosen,
                best,
            )?;
            chosen.pop();
            self.apply(used, c, false);
        }
        Ok(())
    }
}

struct SubmaskIter {
    mask: u64,
    next: Option<u64>,
}

impl SubmaskIter {
    /// Non-empty submasks in increasing order.
    fn new(mask: u64) -> Self {
        SubmaskIter {
            mask,
            next: if mask == 0 {
                None
            } else {
                Some(mask & mask.wrapping_neg())
            },
        }
    }
}

impl Iterator for SubmaskIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        let succ = (cur | !self.mask).wrapping_add(1) & self.mask;
        self.next = if succ == 0 { None } else { Some(succ) };
        Some(cur)
    }
}

fn finish_plan(graph: &PtenGraph, routes: Vec<&Route>) -> FleetPlan {
    let plan = FleetPlan::new(routes.into_iter().cloned().collect()).sorted();
    apply_ports(graph, &plan).expect("port capacity respected by the search")
}

/// Minimum follower-cost partition of the customers under `decision`.
pub fn best_fleet_plan(
    graph: &PtenGraph,
    routes: &[Route],
    decision: &LeaderDecision,
) -> Result<(FleetPlan, f64), OracleError> {
    let search = Search::new(graph.instance(), routes, decision, 0.0);
    let mut counter = Counter {
        plans: 0,
        max: EnumerationBudget::default().max_plans,
    };
    let mut used = vec![0u32; graph.instance().num_stations() * search.horizon];
    let mut best = None;
    search.min_cost(
        &mut counter,
        search.full,
        0.0,
        &mut used,
        &mut Vec::new(),
        &mut best,
    )?;
    let (cost, chosen) = best.ok_or(OracleError::Infeasible)?;
    Ok((finish_plan(graph, chosen), cost))
}

/// Among follower-optimal plans (within `1e-6`), the one with the largest
/// service revenue.
pub fn best_fleet_plan_optimistic(
    graph: &PtenGraph,
    routes: &[Route],
    decision: &LeaderDecision,
) -> Result<(FleetPlan, f64), OracleError> {
    let (_, theta) = best_fleet_plan(graph, routes, decision)?;
    let search = Search::new(graph.instance(), routes, decision, TIE);
    let mut counter = Counter {
        plans: 0,
        max: EnumerationBudget::default().max_plans,
    };
    let mut used = vec![0u32; graph.instance().num_stations() * search.horizon];
    let mut best = None;
    search.max_revenue(
        &mut counter,
        search.full,
        0.0,
        0.0,
        theta + TIE,
        &mut used,
        &mut Vec::new(),
        &mut best,
    )?;
    let (cost, _, chosen) = best.ok_or(OracleError::Infeasible)?;
    Ok((finish_plan(graph, chosen), cost))
}

#[derive(Debug, Clone)]
pub struct BilevelPoint {
    pub decision: LeaderDecision,
    pub follower_cost: f64,
    pub leader_cost: f64,
    pub plan: FleetPlan,
}

#[derive(Debug, Clone)]
pub struct BilevelResult {
    pub best: BilevelPoint,
    /// Every evaluated leader decision in grid order.
    pub grid: Vec<BilevelPoint>,
}

/// Leader decisions with port counts in `{0} ∪ [size_min, size_max]` per
/// station, in lexicographic order.
pub fn leader_grid(instance: &Instance) -> Vec<LeaderDecision> {
    let mut grid: Vec<Vec<u32>> = vec![Vec::new()];
    for st in instance.stations() {
        let options: Vec<u32> = std::iter::once(0)
            .chain(st.size_min.max(1)..=st.size_max)
            .collect();
        grid = grid
            .into_iter()
            .flat_map(|p| {
                options.iter().map(move |&o| {
                    let mut q = p.clone();
                    q.push(o);
                    q
                })
            })
            .collect();
    }
    grid.into_iter()
        .map(|p| LeaderDecision::from_ports(instance, &p))
        .collect()
}

/// Exhaustive optimistic bilevel search over the leader grid.
pub fn bilevel_exhaustive(
    graph: &PtenGraph,
    budget: &EnumerationBudget,
) -> Result<BilevelResult, OracleError> {
    let inst = graph.instance();
    let grid = leader_grid(inst);
    if grid.len() > budget.max_leader_points {
        return Err(OracleError::BudgetExceeded(format!(
            "{} leader decisions",
            grid.len()
        )));
    }
    let routes = enumerate_all(graph, budget)?;
    let points: Vec<Result<Option<BilevelPoint>, OracleError>> = grid
        .into_par_iter()
        .map(
            |decision| match best_fleet_plan_optimistic(graph, &routes, &decision) {
                Ok((plan, follower_cost)) => {
                    let leader_cost = decision.capex(inst) - plan.revenue();
                    Ok(Some(BilevelPoint {
                        decision,
                        follower_cost,
                        leader_cost,
                        plan,
                    }))
                }
                Err(OracleError::Infeasible) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect();
    let mut evaluated = Vec::new();
    for p in points {
        if let Some(p) = p? {
            evaluated.push(p);
        }
    }
    let mut best: Option<&BilevelPoint> = None;
    for p in &evaluated {
        if best.is_none_or(|b| p.leader_cost < b.leader_cost - 1e-9) {
            best = Some(p);
        }
    }
    let best = best.ok_or(OracleError::Infeasible)?.clone();
    Ok(BilevelResult {
        best,
        grid: evaluated,
    })
}

/// Node sequence helper for tests and examples.
pub fn route_nodes(route: &Route) -> Vec<NodeId> {
    route.nodes().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::bundled;
    use crate::pten::expand;

    #[test]
    fn submasks_in_order() {
        let v: Vec<u64> = SubmaskIter::new(0b1011).collect();
        assert_eq!(
            v,
            vec![0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1010, 0b1011]
        );
        assert_eq!(SubmaskIter::new(0).count(), 0);
    }

    #[test]
    fn toy_routes_include_singletons_and_the_charging_route() {
        let g = expand(&bundled("toy").unwrap()).unwrap();
        let routes = enumerate_routes(&g, 0, &EnumerationBudget::default()).unwrap();
        let names = |r: &Route| {
            r.nodes()
                .map(|n| g.node_name(n))
                .collect::<Vec<_>>()
                .join("-")
        };
        let all: Vec<String> = routes.iter().map(names).collect();
        assert!(all.contains(&"D0-C1-D0'".to_string()));
        assert!(all.contains(&"D0-C2-D0'".to_string()));
        assert!(
            all.contains(&"D0-C1-F1-1-2-F1-1-3-C2-D0'".to_string()),
            "{all:?}"
        );
    }

    #[test]
    fn toy_fleet_plan_without_station_uses_two_trucks() {
        let inst = bundled("toy").unwrap();
        let g = expand(&inst).unwrap();
        let routes = enumerate_all(&g, &EnumerationBudget::default()).unwrap();
        let (plan, cost) = best_fleet_plan(&g, &routes, &LeaderDecision::nothing(&inst)).unwrap();
        assert_eq!(plan.routes.len(), 2);
        let cheapest = |mask: u64| {
            routes
                .iter()
                .filter(|r| r.customers == mask)
                .map(|r| r.cost)
                .fold(f64::INFINITY, f64::min)
        };
        let singles = cheapest(0b01) + cheapest(0b10);
        assert!((cost - singles).abs() < 1e-9);
    }
}
