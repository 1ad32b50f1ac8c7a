//! Set-partitioning masters over route columns, column generation with
//! BOXSTEP stabilization, and integer recovery.
//!
//! One [`MasterSpec`] covers every master used by the bilevel loop: the
//! follower's best response, the leader-optimistic check, the leader master
//! with scenario cuts, and the single-entity joint problem.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::evaluate::{
    apply_ports, minimal_upgrade, simulate_route, FleetPlan, LeaderDecision, Route,
};
use crate::mathprog::{
    solve_lp, solve_milp, ColId, LpError, LpModel, LpSolution, LpStatus, RowId, Sense,
    DEFAULT_MILP_GAP,
};
use crate::pten::{NodeId, PtenGraph};
use crate::spprc::{solve_pricing, Dominance, PricingContext, EPS_RC};

/// Objective coefficient of the artificial coverage columns.
pub const ARTIFICIAL_COST: f64 = 1e6;
/// Slack on follower-cost caps, absorbing round-off.
pub const CAP_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ColgenError {
    #[error("column generation hit the iteration limit with bound {bound}")]
    IterationLimit { bound: f64 },
    #[error("master problem is infeasible")]
    Infeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeaderMode {
    /// Station decisions are data; port counts cap charging.
    Fixed(LeaderDecision),
    /// Station decisions are variables of the master.
    Free,
}

/// Which route cost enters the master objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteObjective {
    /// Follower cost `c_r`.
    FollowerCost,
    /// Leader cost `co_r`, the negated service revenue.
    CspCost,
    /// `c_r + co_r`, the fee cancels.
    Total,
}

impl RouteObjective {
    fn weights(self) -> (f64, f64) {
        match self {
            RouteObjective::FollowerCost => (1.0, 0.0),
            RouteObjective::CspCost => (0.0, 1.0),
            RouteObjective::Total => (1.0, 1.0),
        }
    }
}

/// Optimality cut from a stored follower response.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCut {
    /// Follower cost of the stored plan.
    pub fo_cost: f64,
    /// Peak number of simultaneous charges per station in the stored plan.
    pub station_load: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSpec {
    pub leader: LeaderMode,
    pub objective: RouteObjective,
    /// Adds the annualized station investment to the objective.
    pub include_capex: bool,
    /// Upper bound on the total follower cost.
    pub cost_cap: Option<f64>,
    pub cuts: Vec<ScenarioCut>,
}

impl MasterSpec {
    /// Follower best response to a fixed leader decision.
    pub fn follower(decision: LeaderDecision) -> Self {
        MasterSpec {
            leader: LeaderMode::Fixed(decision),
            objective: RouteObjective::FollowerCost,
            include_capex: false,
            cost_cap: None,
            cuts: Vec::new(),
        }
    }

    /// Leader-optimistic choice among plans costing the follower at most `theta`.
    pub fn follower_check(decision: LeaderDecision, theta: f64) -> Self {
        MasterSpec {
            leader: LeaderMode::Fixed(decision),
            objective: RouteObjective::CspCost,
            include_capex: false,
            cost_cap: Some(theta + CAP_TOL),
            cuts: Vec::new(),
        }
    }

    /// Leader master with one optimality cut per stored scenario.
    pub fn leader(cuts: Vec<ScenarioCut>) -> Self {
        MasterSpec {
            leader: LeaderMode::Free,
            objective: RouteObjective::CspCost,
            include_capex: true,
            cost_cap: None,
            cuts,
        }
    }

    /// One decision maker minimizing the sum of both objectives.
    pub fn joint() -> Self {
        MasterSpec {
            leader: LeaderMode::Free,
            objective: RouteObjective::Total,
            include_capex: true,
            cost_cap: None,
            cuts: Vec::new(),
        }
    }

    fn station_open(&self, graph: &PtenGraph, s: usize) -> bool {
        match &self.leader {
            LeaderMode::Fixed(d) => d.build[s] && d.ports[s] > 0,
            LeaderMode::Free => graph.instance().stations()[s].size_max > 0,
        }
    }
}

/// Dual prices of a master, in pricing sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPrices {
    /// Coverage duals per customer.
    pub cover: Vec<f64>,
    /// Port-capacity prices per (station, slot), non-negative.
    pub usage: Vec<Vec<f64>>,
    /// Sum of the prices of every follower-cost cap, non-negative.
    pub alpha: f64,
}

impl DualPrices {
    pub fn zero(graph: &PtenGraph) -> Self {
        let inst = graph.instance();
        DualPrices {
            cover: vec![0.0; inst.num_customers()],
            usage: vec![vec![0.0; inst.horizon() as usize]; inst.num_stations()],
            alpha: 0.0,
        }
    }

    fn covered(&self, route: &Route) -> f64 {
        self.cover
            .iter()
            .enumerate()
            .filter(|(c, _)| route.covers(*c))
            .map(|(_, g)| g)
            .sum()
    }

    fn usage_price(&self, route: &Route) -> f64 {
        route
            .charging
            .iter()
            .map(|c| self.usage[c.station][c.t as usize])
            .sum()
    }
}

/// Reduced cost in the follower master: `c_r - Σ γ_i`.
pub fn reduced_cost_mp1(route: &Route, duals: &DualPrices) -> f64 {
    route.cost - duals.covered(route)
}

/// Reduced cost in the leader master: `co_r - Σ λ_i + Σ μ_it b_rt + α c_r`.
pub fn reduced_cost_mp0(route: &Route, duals: &DualPrices) -> f64 {
    route.csp_cost() - duals.covered(route) + duals.usage_price(route) + duals.alpha * route.cost
}

/// Reduced cost of `route` in a master built from `spec`.
pub fn reduced_cost(spec: &MasterSpec, route: &Route, duals: &DualPrices) -> f64 {
    let (wc, wo) = spec.objective.weights();
    (wc + duals.alpha) * route.cost + wo * route.csp_cost() - duals.covered(route)
        + duals.usage_price(route)
}

/// Generated routes, without duplicates.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    routes: Vec<Route>,
    seen: HashSet<(usize, Vec<NodeId>)>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn contains(&self, route: &Route) -> bool {
        self.seen.contains(&route.signature())
    }

    /// Adds a simulated route; returns false for duplicates.
    pub fn insert(&mut self, route: Route) -> bool {
        if self.seen.insert(route.signature()) {
            self.routes.push(route);
            true
        } else {
            false
        }
    }

    /// Re-simulates the node sequence before adding it.
    pub fn insert_checked(
        &mut self,
        graph: &PtenGraph,
        route: &Route,
    ) -> Result<bool, crate::evaluate::RouteError> {
        let nodes: Vec<NodeId> = route.nodes().collect();
        let fresh = simulate_route(graph, route.vehicle, &nodes)?;
        Ok(self.insert(fresh))
    }

    /// Same routes, with costs recomputed on `graph` (e.g. after a fee change).
    pub fn rebuilt(&self, graph: &PtenGraph) -> ColumnPool {
        let mut out = ColumnPool::new();
        for r in &self.routes {
            let nodes: Vec<NodeId> = r.nodes().collect();
            if let Ok(fresh) = simulate_route(graph, r.vehicle, &nodes) {
                out.insert(fresh);
            }
        }
        out
    }
}

/// BOXSTEP trust region on the coverage duals.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationBox {
    pub center: Vec<f64>,
    pub half_width: f64,
    /// Bound on each stabilization variable.
    pub penalty: f64,
}

impl StabilizationBox {
    /// Box centred at zero with half-width 10% of the mean singleton cost.
    pub fn initial(graph: &PtenGraph, singleton_cost: f64) -> Self {
        StabilizationBox {
            center: vec![0.0; graph.instance().num_customers()],
            half_width: (0.1 * singleton_cost).max(1e-3),
            penalty: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColgenOptions {
    pub stabilize: bool,
    pub max_iterations: usize,
    /// Columns kept per vehicle type and pricing call.
    pub routes_per_pricing: usize,
    /// Label budget for each reduced-cost gap enumeration.
    pub enumeration_labels: usize,
    pub trace: bool,
}

impl Default for ColgenOptions {
    fn default() -> Self {
        ColgenOptions {
            stabilize: true,
            max_iterations: 500,
            routes_per_pricing: 50,
            enumeration_labels: 3_000_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub iter: usize,
    pub lp_obj: f64,
    pub best_phi: Vec<f64>,
    pub pool_size: usize,
    pub box_width: f64,
}

#[derive(Debug, Clone)]
pub struct ColgenResult {
    pub lp_bound: f64,
    pub duals: DualPrices,
    pub iterations: usize,
    pub log: Vec<IterationLog>,
}

/// Iteration log as CSV: `iter,lp_obj,best_phi_per_type,pool_size,box_width`.
pub fn iteration_csv(log: &[IterationLog]) -> String {
    let mut s = String::from("iter,lp_obj,best_phi_per_type,pool_size,box_width\n");
    for row in log {
        let phis: Vec<String> = row
            .best_phi
            .iter()
            .map(|p| {
                if p.is_finite() {
                    format!("{p:.6}")
                } else {
                    "inf".into()
                }
            })
            .collect();
        let _ = writeln!(
            s,
            "{},{:.6},{},{},{:.6}",
            row.iter,
            row.lp_obj,
            phis.join(";"),
            row.pool_size,
            row.box_width
        );
    }
    s
}

/// A built master with handles to its rows and columns.
struct Master {
    model: LpModel,
    cover: Vec<RowId>,
    cap: Vec<Vec<Option<RowId>>>,
    beta: Option<RowId>,
    cut_rows: Vec<RowId>,
    routes: Vec<ColId>,
    artificial: Vec<ColId>,
    stab: Vec<ColId>,
    ports: Vec<Option<ColId>>,
    build: Vec<Option<ColId>>,
}

/// Largest possible follower cost of one route.
fn route_cost_bound(graph: &PtenGraph) -> f64 {
    let inst = graph.instance();
    let econ = inst.economics();
    let days = econ.duty_cycles_per_year;
    let n = inst.num_sites();
    let mut d_max: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            if let Some(l) = inst.link(a, b) {
                d_max = d_max.max(l.distance);
            }
        }
    }
    let t = f64::from(inst.horizon());
    let buy = inst
        .vehicle_types()
        .iter()
        .map(|v| econ.vehicle_crf() * v.purchase_cost)
        .fold(0.0, f64::max);
    let travel = inst
        .vehicle_types()
        .iter()
        .map(|v| v.travel_cost_per_length)
        .fold(0.0, f64::max)
        * days
        * (t + 1.0)
        * d_max;
    let charge = (0..inst.num_stations())
        .map(|s| {
            let st = &inst.stations()[s];
            let price = st.electricity_price.iter().copied().fold(0.0, f64::max);
            (price + inst.service_fee(s)) * inst.slot_energy(s)
        })
        .fold(0.0, f64::max)
        * days
        * t;
    buy + travel + charge
}

/// Upper bound on the follower cost of any plan.
pub fn plan_cost_bound(graph: &PtenGraph) -> f64 {
    graph.instance().num_customers() as f64 * route_cost_bound(graph)
}

fn build_master(
    graph: &PtenGraph,
    spec: &MasterSpec,
    routes: &[Route],
    stab: Option<&StabilizationBox>,
    integer: bool,
) -> Master {
    let inst = graph.instance();
    let n_cust = inst.num_customers();
    let n_st = inst.num_stations();
    let (wc, wo) = spec.objective.weights();
    let zeta = inst.economics().station_crf();
    let mut m = LpModel::new();

    let cover: Vec<RowId> = (0..n_cust)
        .map(|c| m.add_row(format!("cov_{}", inst.customers()[c].id), Sense::Eq, 1.0))
        .collect();

    let mut cap = vec![Vec::new(); n_st];
    for (s, rows) in cap.iter_mut().enumerate() {
        let slots = inst.station_slots(s) as usize;
        *rows = vec![None; inst.horizon() as usize];
        if !spec.station_open(graph, s) {
            continue;
        }
        let rhs = match &spec.leader {
            LeaderMode::Fixed(d) => f64::from(d.ports[s]),
            LeaderMode::Free => 0.0,
        };
        for t in 0..slots.saturating_sub(1) {
            rows[t] = Some(m.add_row(
                format!("cap_{}_{}", inst.stations()[s].id, t),
                Sense::Le,
                rhs,
            ));
        }
    }
    let beta = spec.cost_cap.map(|b| m.add_row("beta_cap", Sense::Le, b));

    let mut ports = vec![None; n_st];
    let mut build = vec![None; n_st];
    if spec.leader == LeaderMode::Free {
        for s in 0..n_st {
            let st = &inst.stations()[s];
            let smax = f64::from(st.size_max);
            let lo = m.add_row(format!("size_lo_{}", st.id), Sense::Ge, 0.0);
            let hi = m.add_row(format!("size_hi_{}", st.id), Sense::Le, 0.0);
            let up = m.add_row(format!("upgrade_{}", st.id), Sense::Le, 0.0);
            let capex = |c: f64| if spec.include_capex { zeta * c } else { 0.0 };
            let y = m.add_column(
                format!("y_{}", st.id),
                0.0,
                1.0,
                0.0,
                true,
                &[
                    (lo, -f64::from(st.size_min)),
                    (hi, -smax),
                    (up, -st.min_grid_capacity()),
                ],
            );
            let mut entries = vec![(lo, 1.0), (hi, 1.0), (up, st.rated_power)];
            for row in cap[s].iter().flatten() {
                entries.push((*row, -1.0));
            }
            let sp = m.add_column(
                format!("s_{}", st.id),
                0.0,
                smax,
                capex(st.port_cost),
                true,
                &entries,
            );
            m.set_priority(y, 2);
            m.set_priority(sp, 2);
            m.add_column(
                format!("dP_{}", st.id),
                0.0,
                smax * st.rated_power,
                capex(st.upgrade_cost),
                false,
                &[(up, -1.0)],
            );
            ports[s] = Some(sp);
            build[s] = Some(y);
        }
    }

    let big_u = plan_cost_bound(graph);
    let mut cut_rows = Vec::new();
    for (z, cut) in spec.cuts.iter().enumerate() {
        let used: Vec<usize> = (0..n_st).filter(|&s| cut.station_load[s] > 0).collect();
        let never = used
            .iter()
            .any(|&s| cut.station_load[s] > inst.stations()[s].size_max);
        let big_m = 1.0 + big_u - cut.fo_cost;
        let rhs = cut.fo_cost + CAP_TOL;
        if used.is_empty() {
            cut_rows.push(m.add_row(format!("beta_{z}"), Sense::Le, rhs));
            continue;
        }
        if never {
            continue;
        }
        let row = m.add_row(format!("beta_{z}"), Sense::Le, rhs + big_m);
        let any = m.add_row(format!("scen_any_{z}"), Sense::Ge, 1.0);
        let f = m.add_column(
            format!("f_{z}"),
            0.0,
            1.0,
            0.0,
            true,
            &[(row, big_m), (any, 1.0)],
        );
        m.set_priority(f, 1);
        for &s in &used {
            let st = &inst.stations()[s];
            let smax = f64::from(st.size_max);
            let n = f64::from(cut.station_load[s]);
            let lo = m.add_row(format!("scen_lo_{z}_{}", st.id), Sense::Ge, n);
            let hi = m.add_row(format!("scen_hi_{z}_{}", st.id), Sense::Le, n - 1.0 + smax);
            let excl = m.add_row(format!("scen_f_{z}_{}", st.id), Sense::Le, 1.0);
            let v = m.add_column(
                format!("v_{z}_{}", st.id),
                0.0,
                1.0,
                0.0,
                true,
                &[(lo, smax), (hi, smax), (excl, 1.0), (any, 1.0)],
            );
            m.set_priority(v, 1);
            let sp = ports[s].expect("scenario cuts need a free leader");
            m.add_coefficient(sp, lo, 1.0);
            m.add_coefficient(sp, hi, 1.0);
            m.add_coefficient(f, excl, 1.0);
        }
        cut_rows.push(row);
    }

    let mut artificial = Vec::new();
    for (c, &row) in cover.iter().enumerate() {
        artificial.push(m.add_column(
            format!("art_{}", inst.customers()[c].id),
            0.0,
            f64::INFINITY,
            ARTIFICIAL_COST,
            false,
            &[(row, 1.0)],
        ));
    }
    let mut stab_cols = Vec::new();
    if let Some(b) = stab {
        for (c, &row) in cover.iter().enumerate() {
            let center = b.center[c];
            stab_cols.push(m.add_column(
                format!("sp_{}", inst.customers()[c].id),
                0.0,
                b.penalty,
                center + b.half_width,
                false,
                &[(row, 1.0)],
            ));
            stab_cols.push(m.add_column(
                format!("sm_{}", inst.customers()[c].id),
                0.0,
                b.penalty,
                -(center - b.half_width),
                false,
                &[(row, -1.0)],
            ));
        }
    }

    let mut route_cols = Vec::with_capacity(routes.len());
    for (k, r) in routes.iter().enumerate() {
        let mut entries: Vec<(RowId, f64)> = Vec::new();
        for (c, &row) in cover.iter().enumerate() {
            if r.covers(c) {
                entries.push((row, 1.0));
            }
        }
        for slot in &r.charging {
            if let Some(row) = cap[slot.station][slot.t as usize] {
                match entries.iter_mut().find(|(rr, _)| *rr == row) {
                    Some(e) => e.1 += 1.0,
                    None => entries.push((row, 1.0)),
                }
            }
        }
        if let Some(row) = beta {
            entries.push((row, r.cost));
        }
        for &row in &cut_rows {
            entries.push((row, r.cost));
        }
        let cost = wc * r.cost + wo * r.csp_cost();
        route_cols.push(m.add_column(format!("r_{k}"), 0.0, 1.0, cost, integer, &entries));
    }

    Master {
        model: m,
        cover,
        cap,
        beta,
        cut_rows,
        routes: route_cols,
        artificial,
        stab: stab_cols,
        ports,
        build,
    }
}

fn usable(spec: &MasterSpec, route: &Route) -> bool {
    match &spec.leader {
        LeaderMode::Fixed(d) => route
            .charging
            .iter()
            .all(|c| d.build[c.station] && d.ports[c.station] > 0),
        LeaderMode::Free => true,
    }
}

fn extract_duals(graph: &PtenGraph, master: &Master, sol: &LpSolution) -> DualPrices {
    let mut duals = DualPrices::zero(graph);
    for (c, &row) in master.cover.iter().enumerate() {
        duals.cover[c] = sol.dual(row);
    }
    for (s, rows) in master.cap.iter().enumerate() {
        for (t, row) in rows.iter().enumerate() {
            if let Some(row) = row {
                duals.usage[s][t] = (-sol.dual(*row)).max(0.0);
            }
        }
    }
    let mut alpha = 0.0;
    if let Some(row) = master.beta {
        alpha += (-sol.dual(row)).max(0.0);
    }
    for &row in &master.cut_rows {
        alpha += (-sol.dual(row)).max(0.0);
    }
    duals.alpha = alpha;
    duals
}

fn pricing_context(
    graph: &PtenGraph,
    spec: &MasterSpec,
    duals: &DualPrices,
    vehicle: usize,
    threshold: f64,
    dominance: Dominance,
    opts: &ColgenOptions,
) -> PricingContext {
    let (wc, wo) = spec.objective.weights();
    let mut ctx = PricingContext::new(graph, vehicle);
    ctx.cover_dual = duals.cover.clone();
    ctx.usage_dual = duals.usage.clone();
    ctx.cost_weight = wc + duals.alpha;
    ctx.revenue_weight = wo;
    ctx.open = (0..graph.instance().num_stations())
        .map(|s| spec.station_open(graph, s))
        .collect();
    ctx.threshold = threshold;
    ctx.dominance = dominance;
    ctx.trace = opts.trace;
    ctx
}

/// Solves the LP relaxation of the master over `pool`.
pub fn solve_rmp(
    graph: &PtenGraph,
    spec: &MasterSpec,
    pool: &ColumnPool,
    stabilization: Option<&StabilizationBox>,
) -> Result<(LpSolution, DualPrices), ColgenError> {
    let routes: Vec<Route> = pool
        .routes()
        .iter()
        .filter(|r| usable(spec, r))
        .cloned()
        .collect();
    let master = build_master(graph, spec, &routes, stabilization, false);
    let sol = solve_lp(&master.model)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(ColgenError::Infeasible),
        LpStatus::Unbounded => {
            return Err(ColgenError::Lp(LpError::InvalidModel(
                "unbounded master".into(),
            )))
        }
    }
    let duals = extract_duals(graph, &master, &sol);
    Ok((sol, duals))
}

fn mean_singleton_cost(graph: &PtenGraph) -> f64 {
    let inst = graph.instance();
    let econ = inst.economics();
    let v = &inst.vehicle_types()[0];
    let mut total = 0.0;
    for c in 0..inst.num_customers() {
        let d = inst
            .link(inst.depot_site(), inst.customer_site(c))
            .map_or(0.0, |l| 2.0 * l.distance);
        total += econ.vehicle_crf() * v.purchase_cost
            + econ.duty_cycles_per_year * v.travel_cost_per_length * d;
    }
    total / inst.num_customers().max(1) as f64
}

/// Column generation to LP optimality of the master.
pub fn run_column_generation(
    graph: &PtenGraph,
    spec: &MasterSpec,
    pool: &mut ColumnPool,
    opts: &ColgenOptions,
) -> Result<ColgenResult, ColgenError> {
    let n_types = graph.instance().vehicle_types().len();
    let mut boxed = opts
        .stabilize
        .then(|| StabilizationBox::initial(graph, mean_singleton_cost(graph)));
    let mut log = Vec::new();
    let mut last_obj = f64::INFINITY;
    let mut stalls = 0;
    for iter in 1..=opts.max_iterations {
        let (sol, duals) = solve_rmp(graph, spec, pool, boxed.as_ref())?;
        let results: Vec<_> = (0..n_types)
            .into_par_iter()
            .map(|k| {
                let mut ctx =
                    pricing_context(graph, spec, &duals, k, -EPS_RC, Dominance::Exact, opts);
                ctx.max_routes = Some(opts.routes_per_pricing);
                solve_pricing(graph, &ctx)
            })
            .collect();
        let best_phi: Vec<f64> = results.iter().map(|r| r.best_reduced_cost).collect();
        let mut added = 0;
        for res in results {
            for pr in res.routes {
                if pool.insert(pr.route) {
                    added += 1;
                }
            }
        }
        log.push(IterationLog {
            iter,
            lp_obj: sol.objective,
            best_phi,
            pool_size: pool.len(),
            box_width: boxed.as_ref().map_or(0.0, |b| b.half_width),
        });
        if added == 0 {
            if boxed.is_some() {
                // Finish without the box so the final duals are exact.
                boxed = None;
                continue;
            }
            return Ok(ColgenResult {
                lp_bound: sol.objective,
                duals,
                iterations: iter,
                log,
            });
        }
        if let Some(b) = boxed.as_mut() {
            let moved = duals
                .cover
                .iter()
                .zip(&b.center)
                .map(|(d, c)| (d - c).abs())
                .fold(0.0, f64::max);
            if moved > b.half_width / 2.0 {
                b.center = duals.cover.clone();
            }
            if sol.objective >= last_obj - 1e-9 * last_obj.abs().max(1.0) {
                stalls += 1;
                if stalls >= 2 {
                    b.half_width /= 2.0;
                    stalls = 0;
                }
            } else {
                stalls = 0;
            }
        }
        last_obj = sol.objective;
    }
    let bound = log.last().map_or(f64::NEG_INFINITY, |l| l.lp_obj);
    Err(ColgenError::IterationLimit { bound })
}

#[derive(Debug, Clone)]
pub struct IntegerSolution {
    pub plan: FleetPlan,
    pub decision: LeaderDecision,
    pub objective: f64,
    /// LP bound of the master over every route.
    pub lp_bound: f64,
    /// False when the reduced-cost enumeration hit its label budget.
    pub exact: bool,
}

fn solve_integer_master(
    graph: &PtenGraph,
    spec: &MasterSpec,
    pool: &ColumnPool,
) -> Result<Option<(f64, FleetPlan, LeaderDecision)>, ColgenError> {
    let inst = graph.instance();
    let routes = pareto_filter(
        spec,
        pool.routes()
            .iter()
            .filter(|r| usable(spec, r))
            .cloned()
            .collect(),
    );
    let master = build_master(graph, spec, &routes, None, true);
    let started = std::time::Instant::now();
    let sol = solve_milp(&master.model, DEFAULT_MILP_GAP)?;
    log::debug!(
        "integer master: {} columns, {} rows, {} nodes, {:?}",
        master.model.num_columns(),
        master.model.num_rows(),
        sol.nodes,
        started.elapsed()
    );
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    if master.artificial.iter().any(|&a| sol.value(a) > 1e-6) {
        return Ok(None);
    }
    debug_assert!(master.stab.is_empty());
    let chosen: Vec<Route> = routes
        .iter()
        .zip(&master.routes)
        .filter(|(_, &c)| sol.value(c) > 0.5)
        .map(|(r, _)| r.clone())
        .collect();
    let decision = match &spec.leader {
        LeaderMode::Fixed(d) => d.clone(),
        LeaderMode::Free => {
            let ports: Vec<u32> = master
                .ports
                .iter()
                .map(|c| c.map_or(0, |c| sol.value(c).round() as u32))
                .collect();
            let mut d = LeaderDecision::from_ports(inst, &ports);
            for (s, b) in master.build.iter().enumerate() {
                if let Some(b) = b {
                    d.build[s] = sol.value(*b) > 0.5 && ports[s] > 0;
                }
            }
            for s in 0..ports.len() {
                d.upgrade[s] = minimal_upgrade(inst, s, ports[s]);
            }
            d
        }
    };
    let plan = apply_ports(graph, &FleetPlan::new(chosen).sorted())
        .map_err(|_| ColgenError::Infeasible)?;
    Ok(Some((sol.objective, plan, decision)))
}

/// Drops routes that another route with the same customers beats on every
/// term the master can see.
fn pareto_filter(spec: &MasterSpec, mut routes: Vec<Route>) -> Vec<Route> {
    let sees_cost = spec.objective != RouteObjective::CspCost
        || spec.cost_cap.is_some()
        || !spec.cuts.is_empty();
    let sees_revenue = spec.objective != RouteObjective::FollowerCost;
    routes.sort_by(|a, b| {
        a.customers
            .cmp(&b.customers)
            .then_with(|| a.cost.total_cmp(&b.cost))
            .then_with(|| a.signature().cmp(&b.signature()))
    });
    let mut keep: Vec<Route> = Vec::with_capacity(routes.len());
    let mut group_start = 0;
    for r in routes {
        if keep
            .last()
            .is_none_or(|l: &Route| l.customers != r.customers)
        {
            group_start = keep.len();
        }
        let mut usage = r.charging.clone();
        usage.sort();
        let dominated = keep[group_start..].iter().any(|k| {
            let mut ku = k.charging.clone();
            ku.sort();
            (!sees_cost || k.cost <= r.cost)
                && (!sees_revenue || k.csp_cost() <= r.csp_cost())
                && is_sub_multiset(&ku, &usage)
        });
        if !dominated {
            keep.push(r);
        }
    }
    keep
}

fn is_sub_multiset<T: Ord>(a: &[T], b: &[T]) -> bool {
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

/// Integer optimum of the master after column generation.
///
/// Solves the integer master over the pool, then adds every route whose
/// reduced cost under the final duals lies within the integrality gap and
/// solves again. Any route of an optimal integer solution passes that test,
/// so the result is optimal over all routes unless the enumeration budget
/// is exhausted. The pool afterwards holds every route of every optimal
/// solution, ties included.
pub fn integerize(
    graph: &PtenGraph,
    spec: &MasterSpec,
    pool: &mut ColumnPool,
    lp: &ColgenResult,
    opts: &ColgenOptions,
) -> Result<IntegerSolution, ColgenError> {
    let tol = 1e-6 * lp.lp_bound.abs().max(1.0);
    let mut best = solve_integer_master(graph, spec, pool)?;
    // Without an incumbent the margin grows until one appears.
    let mut margin = match &best {
        Some((obj, _, _)) => obj - lp.lp_bound + tol,
        None => (0.01 * lp.lp_bound.abs()).max(1.0),
    };
    let mut exact = true;
    for _ in 0..64 {
        let found: Vec<_> = (0..graph.instance().vehicle_types().len())
            .into_par_iter()
            .map(|k| {
                let mut ctx = pricing_context(
                    graph,
                    spec,
                    &lp.duals,
                    k,
                    margin,
                    Dominance::Gap(margin),
                    opts,
                );
                ctx.label_limit = Some(opts.enumeration_labels);
                solve_pricing(graph, &ctx)
            })
            .collect();
        let mut added = 0;
        for res in found {
            if res.truncated {
                exact = false;
            }
            for pr in res.routes {
                if pool.insert(pr.route) {
                    added += 1;
                }
            }
        }
        log::debug!(
            "margin {margin:.6}: enumeration added {added} columns, pool {}",
            pool.len()
        );
        if added > 0 {
            best = solve_integer_master(graph, spec, pool)?;
        }
        if !exact {
            log::warn!("reduced-cost enumeration truncated; integer master may be suboptimal");
            break;
        }
        match &best {
            Some((obj, _, _)) if obj - lp.lp_bound <= margin => break,
            Some((obj, _, _)) => margin = obj - lp.lp_bound + tol,
            None => margin *= 4.0,
        }
    }
    let (objective, plan, decision) = best.ok_or(ColgenError::Infeasible)?;
    Ok(IntegerSolution {
        plan,
        decision,
        objective,
        lp_bound: lp.lp_bound,
        exact,
    })
}

/// Column generation followed by integer recovery.
pub fn solve_master(
    graph: &PtenGraph,
    spec: &MasterSpec,
    pool: &mut ColumnPool,
    opts: &ColgenOptions,
) -> Result<(IntegerSolution, ColgenResult), ColgenError> {
    let started = std::time::Instant::now();
    let lp = run_column_generation(graph, spec, pool, opts)?;
    let lp_time = started.elapsed();
    let int = integerize(graph, spec, pool, &lp, opts)?;
    log::debug!(
        "master {:?}: {} lp iterations in {:?}, integer phase {:?}",
        spec.objective,
        lp.iterations,
        lp_time,
        started.elapsed() - lp_time
    );
    Ok((int, lp))
}
