//! Route simulation, objective evaluation and joint feasibility checks.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::instance::{Instance, NodeKind, VehicleType};
use crate::pten::{ArcKind, NodeId, PtenGraph, DEPOT, SINK};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RouteError {
    #[error("time window violated at {node}: service at {start}, window [{early}, {late}]")]
    TimeWindowViolation {
        node: String,
        start: u32,
        early: u32,
        late: u32,
    },
    #[error("load {load} exceeds capacity {capacity}")]
    OverloadError { load: f64, capacity: f64 },
    #[error("battery depleted on arrival at {node}")]
    EnergyDepletion { node: String },
    #[error("charging at {node} would exceed battery capacity")]
    Overcharge { node: String },
    #[error("arrival at {node} at time {arrival} is later than its slot {slot}")]
    SlotMismatch {
        node: String,
        arrival: u32,
        slot: u32,
    },
    #[error("route length {length} exceeds the cap {cap}")]
    RouteTooLong { length: f64, cap: f64 },
    #[error("invalid route: {0}")]
    InvalidRoute(String),
}

/// One stop of a simulated route.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteVisit {
    pub node: NodeId,
    pub arrival: u32,
    /// Service start at customers, the slot time at dummies.
    pub start: u32,
    pub departure: u32,
    /// Freight still on board after the stop.
    pub load_after: f64,
    /// Battery level after the stop.
    pub energy_after: f64,
}

/// One charging arc of a route: station and the slot it starts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChargeSlot {
    pub station: usize,
    pub t: u32,
}

/// A consecutive run of charging arcs at one station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChargeSession {
    pub station: usize,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// Index into the instance's vehicle types.
    pub vehicle: usize,
    pub visits: Vec<RouteVisit>,
    /// Bit `c` set when customer `c` is served.
    pub customers: u64,
    /// Charging arcs in route order.
    pub charging: Vec<ChargeSlot>,
    pub distance: f64,
    pub vehicle_cost: f64,
    pub travel_cost: f64,
    pub charging_cost: f64,
    /// Follower cost of the route, `c_r`.
    pub cost: f64,
    /// Service-fee revenue collected by the charging provider.
    pub revenue: f64,
    pub energy_purchased: f64,
}

impl Route {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.visits.iter().map(|v| v.node)
    }

    /// Cost of the route in the leader's master, `co_r = -revenue`.
    pub fn csp_cost(&self) -> f64 {
        -self.revenue
    }

    pub fn covers(&self, customer: usize) -> bool {
        self.customers & (1u64 << customer) != 0
    }

    pub fn num_customers(&self) -> u32 {
        self.customers.count_ones()
    }

    pub fn uses_station(&self, station: usize) -> bool {
        self.charging.iter().any(|c| c.station == station)
    }

    pub fn sessions(&self) -> Vec<ChargeSession> {
        let mut out: Vec<ChargeSession> = Vec::new();
        for c in &self.charging {
            match out.last_mut() {
                Some(s) if s.station == c.station && s.end == c.t => s.end = c.t + 1,
                _ => out.push(ChargeSession {
                    station: c.station,
                    start: c.t,
                    end: c.t + 1,
                }),
            }
        }
        out
    }

    /// Canonical identity of the route: vehicle and node sequence.
    pub fn signature(&self) -> (usize, Vec<NodeId>) {
        (self.vehicle, self.nodes().collect())
    }

    /// Visit sequence with dummy ports reset to 1.
    pub fn canonical_nodes(&self, graph: &PtenGraph) -> Vec<NodeId> {
        self.nodes()
            .map(|n| match graph.kind(n) {
                NodeKind::StationDummy { station, time, .. } => {
                    graph.dummy(station, time, 1).expect("port 1 exists")
                }
                _ => n,
            })
            .collect()
    }
}

/// Incremental route simulation, one node at a time.
#[derive(Debug, Clone)]
pub struct RouteSimulator<'g> {
    graph: &'g PtenGraph,
    vtype: &'g VehicleType,
    vehicle: usize,
    visits: Vec<RouteVisit>,
    customers: u64,
    charging: Vec<ChargeSlot>,
    distance: f64,
    load_total: f64,
    /// Charging arcs in the current station run; `None` outside stations.
    run_length: Option<u32>,
}

impl<'g> RouteSimulator<'g> {
    pub fn new(graph: &'g PtenGraph, vehicle: usize) -> Result<Self, RouteError> {
        let vtype = graph
            .instance()
            .vehicle_types()
            .get(vehicle)
            .ok_or_else(|| RouteError::InvalidRoute(format!("unknown vehicle index {vehicle}")))?;
        Ok(RouteSimulator {
            graph,
            vtype,
            vehicle,
            visits: vec![RouteVisit {
                node: DEPOT,
                arrival: 0,
                start: 0,
                departure: 0,
                load_after: 0.0,
                energy_after: vtype.battery_capacity,
            }],
            customers: 0,
            charging: Vec::new(),
            distance: 0.0,
            load_total: 0.0,
            run_length: None,
        })
    }

    pub fn last(&self) -> &RouteVisit {
        self.visits.last().expect("depot visit")
    }

    pub fn customers(&self) -> u64 {
        self.customers
    }

    pub fn finished(&self) -> bool {
        self.last().node == SINK
    }

    /// Moves to `next`, checking every resource.
    pub fn step(&mut self, next: NodeId) -> Result<(), RouteError> {
        let g = self.graph;
        let inst = g.instance();
        let cur = self.last().clone();
        if cur.node == SINK {
            return Err(RouteError::InvalidRoute(
                "route continues past the sink".into(),
            ));
        }
        let arc_id = g.find_arc(cur.node, next).ok_or_else(|| {
            RouteError::InvalidRoute(format!(
                "no arc {} -> {}",
                g.node_name(cur.node),
                g.node_name(next)
            ))
        })?;
        let arc = *g.arc(arc_id);
        let name = || g.node_name(next);

        if let Some(run) = self.run_length {
            if arc.kind == ArcKind::External && run == 0 {
                return Err(RouteError::InvalidRoute(format!(
                    "station visit at {} without charging",
                    g.node_name(cur.node)
                )));
            }
        }

        let mut visit = RouteVisit {
            node: next,
            arrival: cur.departure + arc.travel_time,
            start: 0,
            departure: 0,
            load_after: cur.load_after,
            energy_after: cur.energy_after,
        };

        match arc.kind {
            ArcKind::Internal => {
                let NodeKind::StationDummy { station, time, .. } = g.kind(cur.node) else {
                    unreachable!("internal arcs start at dummies")
                };
                let energy = inst.slot_energy(station);
                if cur.energy_after + energy > self.vtype.battery_capacity + EPS {
                    return Err(RouteError::Overcharge {
                        node: g.node_name(cur.node),
                    });
                }
                visit.energy_after = cur.energy_after + energy;
                visit.arrival = time + 1;
                visit.start = time + 1;
                visit.departure = time + 1;
                self.charging.push(ChargeSlot { station, t: time });
                self.run_length = self.run_length.map(|r| r + 1);
            }
            ArcKind::External => {
                self.distance += arc.distance;
                if let Some(cap) = inst.economics().max_route_length {
                    if self.distance > cap + EPS {
                        return Err(RouteError::RouteTooLong {
                            length: self.distance,
                            cap,
                        });
                    }
                }
                visit.energy_after = cur.energy_after - self.vtype.consumption_rate * arc.distance;
                if visit.energy_after < -EPS {
                    return Err(RouteError::EnergyDepletion { node: name() });
                }
                visit.energy_after = visit.energy_after.max(0.0);
                match g.kind(next) {
                    NodeKind::Customer(c) => {
                        if self.customers & (1u64 << c) != 0 {
                            return Err(RouteError::InvalidRoute(format!(
                                "customer {} visited twice",
                                name()
                            )));
                        }
                        let cust = &inst.customers()[c];
                        visit.start = visit.arrival.max(cust.window_early);
                        visit.departure = visit.start + cust.service_time;
                        if visit.departure > cust.window_late {
                            return Err(RouteError::TimeWindowViolation {
                                node: name(),
                                start: visit.start,
                                early: cust.window_early,
                                late: cust.window_late,
                            });
                        }
                        self.customers |= 1u64 << c;
                        self.load_total += cust.demand;
                        if self.load_total > self.vtype.freight_capacity + EPS {
                            return Err(RouteError::OverloadError {
                                load: self.load_total,
                                capacity: self.vtype.freight_capacity,
                            });
                        }
                        visit.load_after = -cust.demand;
                        self.run_length = None;
                    }
                    NodeKind::StationDummy { time, .. } => {
                        if visit.arrival > time {
                            return Err(RouteError::SlotMismatch {
                                node: name(),
                                arrival: visit.arrival,
                                slot: time,
                            });
                        }
                        visit.start = time;
                        visit.departure = time;
                        visit.load_after = 0.0;
                        self.run_length = Some(0);
                    }
                    NodeKind::DepotSink => {
                        if visit.arrival > inst.horizon() {
                            return Err(RouteError::TimeWindowViolation {
                                node: name(),
                                start: visit.arrival,
                                early: 0,
                                late: inst.horizon(),
                            });
                        }
                        visit.start = visit.arrival;
                        visit.departure = visit.arrival;
                        visit.load_after = 0.0;
                        self.run_length = None;
                    }
                    NodeKind::Depot | NodeKind::StationCandidate(_) => {
                        return Err(RouteError::InvalidRoute(format!("cannot enter {}", name())));
                    }
                }
            }
        }
        self.visits.push(visit);
        Ok(())
    }

    /// Completes the simulation into a costed route.
    pub fn finish(mut self) -> Result<Route, RouteError> {
        if !self.finished() {
            return Err(RouteError::InvalidRoute(
                "route does not end at the sink".into(),
            ));
        }
        if self.customers == 0 {
            return Err(RouteError::InvalidRoute("route serves no customer".into()));
        }
        // Convert per-stop deltas into on-board loads.
        let mut on_board = self.load_total;
        for v in self.visits.iter_mut() {
            if v.load_after < 0.0 {
                on_board += v.load_after;
            }
            v.load_after = on_board.max(0.0);
        }
        self.visits[0].load_after = self.load_total;

        let inst = self.graph.instance();
        let econ = inst.economics();
        let days = econ.duty_cycles_per_year;
        let vehicle_cost = econ.vehicle_crf() * self.vtype.purchase_cost;
        let travel_cost = days * self.vtype.travel_cost_per_length * self.distance;
        let mut charging_cost = 0.0;
        let mut revenue = 0.0;
        let mut energy = 0.0;
        for c in &self.charging {
            let e = inst.slot_energy(c.station);
            let st = &inst.stations()[c.station];
            let fee = inst.service_fee(c.station);
            charging_cost += days * (st.electricity_price[c.t as usize] + fee) * e;
            revenue += days * fee * e;
            energy += e;
        }
        Ok(Route {
            vehicle: self.vehicle,
            visits: self.visits,
            customers: self.customers,
            charging: self.charging,
            distance: self.distance,
            vehicle_cost,
            travel_cost,
            charging_cost,
            cost: vehicle_cost + travel_cost + charging_cost,
            revenue,
            energy_purchased: energy,
        })
    }
}

/// Simulates `nodes` (depot first, sink last) for vehicle type index `vehicle`.
pub fn simulate_route(
    graph: &PtenGraph,
    vehicle: usize,
    nodes: &[NodeId],
) -> Result<Route, RouteError> {
    match nodes.first() {
        Some(&n) if n == DEPOT => {}
        _ => {
            return Err(RouteError::InvalidRoute(
                "route must start at the depot".into(),
            ))
        }
    }
    let mut sim = RouteSimulator::new(graph, vehicle)?;
    for &n in &nodes[1..] {
        sim.step(n)?;
    }
    sim.finish()
}

/// Leader decision: build flags, port counts and transformer upgrades.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderDecision {
    pub build: Vec<bool>,
    pub ports: Vec<u32>,
    pub upgrade: Vec<f64>,
}

impl LeaderDecision {
    pub fn nothing(instance: &Instance) -> Self {
        let n = instance.num_stations();
        LeaderDecision {
            build: vec![false; n],
            ports: vec![0; n],
            upgrade: vec![0.0; n],
        }
    }

    /// Builds every station with a positive port count, with the smallest
    /// feasible upgrade.
    pub fn from_ports(instance: &Instance, ports: &[u32]) -> Self {
        let build: Vec<bool> = ports.iter().map(|&p| p > 0).collect();
        let upgrade = ports
            .iter()
            .enumerate()
            .map(|(i, &p)| minimal_upgrade(instance, i, p))
            .collect();
        LeaderDecision {
            build,
            ports: ports.to_vec(),
            upgrade,
        }
    }

    pub fn stations_built(&self) -> usize {
        self.build.iter().filter(|&&b| b).count()
    }

    /// Checks the size and upgrade constraints of the leader.
    pub fn violations(&self, instance: &Instance) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, st) in instance.stations().iter().enumerate() {
            let (b, s, dp) = (self.build[i], self.ports[i], self.upgrade[i]);
            let ok_size = if b {
                st.size_min <= s && s <= st.size_max
            } else {
                s == 0 && dp == 0.0
            };
            if !ok_size {
                out.push(Violation::new(ViolationKind::StationSize).at_station(i));
            }
            if b && dp + 1e-9 < minimal_upgrade(instance, i, s) {
                out.push(Violation::new(ViolationKind::Upgrade).at_station(i));
            }
        }
        out
    }

    /// Annualized investment of the decision.
    pub fn capex(&self, instance: &Instance) -> f64 {
        let zeta = instance.economics().station_crf();
        instance
            .stations()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.build[*i])
            .map(|(i, st)| {
                zeta * (st.port_cost * f64::from(self.ports[i]) + st.upgrade_cost * self.upgrade[i])
            })
            .sum()
    }
}

/// Smallest transformer upgrade for `ports` chargers at `station`.
pub fn minimal_upgrade(instance: &Instance, station: usize, ports: u32) -> f64 {
    if ports == 0 {
        return 0.0;
    }
    let st = &instance.stations()[station];
    (f64::from(ports) * st.rated_power - st.min_grid_capacity()).max(0.0)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FleetPlan {
    pub routes: Vec<Route>,
}

impl FleetPlan {
    pub fn new(routes: Vec<Route>) -> Self {
        FleetPlan { routes }
    }

    /// Charging arcs per (station, slot).
    pub fn usage(&self) -> BTreeMap<ChargeSlot, u32> {
        let mut m = BTreeMap::new();
        for r in &self.routes {
            for c in &r.charging {
                *m.entry(*c).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn energy_sold(&self) -> f64 {
        self.routes.iter().map(|r| r.energy_purchased).sum()
    }

    pub fn revenue(&self) -> f64 {
        self.routes.iter().map(|r| r.revenue).sum()
    }

    /// Number of vehicles bought per vehicle type index.
    pub fn fleet(&self, instance: &Instance) -> Vec<usize> {
        let mut f = vec![0; instance.vehicle_types().len()];
        for r in &self.routes {
            f[r.vehicle] += 1;
        }
        f
    }

    /// Routes ordered by their node sequences.
    pub fn sorted(mut self) -> Self {
        self.routes.sort_by_key(|a| a.signature());
        self
    }
}

/// Follower objective of `plan`.
pub fn fo_cost(plan: &FleetPlan) -> f64 {
    plan.routes.iter().map(|r| r.cost).sum()
}

/// Leader objective: annualized investment less service revenue.
pub fn csp_cost(instance: &Instance, decision: &LeaderDecision, plan: &FleetPlan) -> f64 {
    decision.capex(instance) - plan.revenue()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    UncoveredCustomer,
    DuplicateCustomer,
    PortCapacity,
    UnbuiltStation,
    StationSize,
    Upgrade,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::UncoveredCustomer => "uncovered_customer",
            ViolationKind::DuplicateCustomer => "duplicate_customer",
            ViolationKind::PortCapacity => "port_capacity",
            ViolationKind::UnbuiltStation => "unbuilt_station",
            ViolationKind::StationSize => "station_size",
            ViolationKind::Upgrade => "upgrade",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub kind: ViolationKind,
    pub station: Option<usize>,
    pub t: Option<u32>,
    pub customer: Option<usize>,
}

impl Violation {
    fn new(kind: ViolationKind) -> Self {
        Violation {
            kind,
            station: None,
            t: None,
            customer: None,
        }
    }

    fn at_station(mut self, s: usize) -> Self {
        self.station = Some(s);
        self
    }

    fn at_time(mut self, t: u32) -> Self {
        self.t = Some(t);
        self
    }

    fn for_customer(mut self, c: usize) -> Self {
        self.customer = Some(c);
        self
    }

    /// `violation kind=… station=… t=…`
    pub fn render(&self, instance: &Instance) -> String {
        let mut s = format!("violation kind={}", self.kind.as_str());
        if let Some(i) = self.station {
            s.push_str(&format!(" station={}", instance.stations()[i].id));
        }
        if let Some(t) = self.t {
            s.push_str(&format!(" t={t}"));
        }
        if let Some(c) = self.customer {
            s.push_str(&format!(" customer={}", instance.customers()[c].id));
        }
        s
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violation kind={}", self.kind.as_str())?;
        if let Some(i) = self.station {
            write!(f, " station={i}")?;
        }
        if let Some(t) = self.t {
            write!(f, " t={t}")?;
        }
        if let Some(c) = self.customer {
            write!(f, " customer={c}")?;
        }
        Ok(())
    }
}

/// Port for each charging session, keyed by (route index, session index).
pub type PortAssignment = BTreeMap<(usize, usize), u32>;

/// Assigns ports greedily in order of session start, lowest free port first.
/// On interval conflicts this needs exactly the peak concurrency.
pub fn assign_ports(plan: &FleetPlan) -> PortAssignment {
    let mut sessions: Vec<(ChargeSession, usize, usize)> = Vec::new();
    for (r, route) in plan.routes.iter().enumerate() {
        for (k, s) in route.sessions().into_iter().enumerate() {
            sessions.push((s, r, k));
        }
    }
    sessions.sort_by_key(|(s, r, k)| (s.station, s.start, *r, *k));
    let mut busy_until: BTreeMap<(usize, u32), u32> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (s, r, k) in sessions {
        let mut port = 1;
        while busy_until
            .get(&(s.station, port))
            .is_some_and(|&e| e > s.start)
        {
            port += 1;
        }
        busy_until.insert((s.station, port), s.end);
        out.insert((r, k), port);
    }
    out
}

/// Rewrites every route onto the ports chosen by [`assign_ports`].
pub fn apply_ports(graph: &PtenGraph, plan: &FleetPlan) -> Result<FleetPlan, RouteError> {
    let ports = assign_ports(plan);
    let mut routes = Vec::with_capacity(plan.routes.len());
    for (r, route) in plan.routes.iter().enumerate() {
        let mut session = 0usize;
        let mut in_station = false;
        let mut nodes = Vec::with_capacity(route.visits.len());
        for v in &route.visits {
            match graph.kind(v.node) {
                NodeKind::StationDummy { station, time, .. } => {
                    let port = ports.get(&(r, session)).copied().unwrap_or(1);
                    let node = graph.dummy(station, time, port).ok_or_else(|| {
                        RouteError::InvalidRoute(format!(
                            "port {port} exceeds the size of station {station}"
                        ))
                    })?;
                    nodes.push(node);
                    in_station = true;
                }
                _ => {
                    if in_station {
                        session += 1;
                        in_station = false;
                    }
                    nodes.push(v.node);
                }
            }
        }
        routes.push(simulate_route(graph, route.vehicle, &nodes)?);
    }
    Ok(FleetPlan::new(routes))
}

/// Checks coverage, station availability and port capacity of a plan under a
/// leader decision. Returns every violation found, sorted.
pub fn check_joint_feasibility(
    instance: &Instance,
    decision: &LeaderDecision,
    plan: &FleetPlan,
) -> Result<(), Vec<Violation>> {
    let mut out = decision.violations(instance);
    let mut seen = vec![0u32; instance.num_customers()];
    for r in &plan.routes {
        for (c, n) in seen.iter_mut().enumerate() {
            if r.covers(c) {
                *n += 1;
            }
        }
    }
    for (c, &n) in seen.iter().enumerate() {
        if n == 0 {
            out.push(Violation::new(ViolationKind::UncoveredCustomer).for_customer(c));
        } else if n > 1 {
            out.push(Violation::new(ViolationKind::DuplicateCustomer).for_customer(c));
        }
    }
    for (slot, n) in plan.usage() {
        if !decision.build[slot.station] {
            out.push(
                Violation::new(ViolationKind::UnbuiltStation)
                    .at_station(slot.station)
                    .at_time(slot.t),
            );
        } else if n > decision.ports[slot.station] {
            out.push(
                Violation::new(ViolationKind::PortCapacity)
                    .at_station(slot.station)
                    .at_time(slot.t),
            );
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Flow-variable view of a plan, one vehicle per route.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawEncoding {
    /// Arcs `(vehicle, from, to)` with `x = 1`.
    pub x: Vec<(usize, NodeId, NodeId)>,
    /// Visit time per (vehicle, node).
    pub tau: BTreeMap<(usize, NodeId), u32>,
    /// Battery level per (vehicle, node).
    pub b: BTreeMap<(usize, NodeId), f64>,
    /// Load on board per (vehicle, node).
    pub q: BTreeMap<(usize, NodeId), f64>,
    /// Vehicle type index per vehicle.
    pub vehicle_type: Vec<usize>,
}

pub fn encode_plan(plan: &FleetPlan) -> RawEncoding {
    let mut enc = RawEncoding::default();
    for (k, r) in plan.routes.iter().enumerate() {
        enc.vehicle_type.push(r.vehicle);
        for w in r.visits.windows(2) {
            enc.x.push((k, w[0].node, w[1].node));
        }
        for v in &r.visits {
            enc.tau.insert((k, v.node), v.start);
            enc.b.insert((k, v.node), v.energy_after);
            enc.q.insert((k, v.node), v.load_after);
        }
    }
    enc
}
