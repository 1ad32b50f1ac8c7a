//! Label-setting pricing over the expanded network.
//!
//! Labels carry the reduced cost of a partial path and its resources. Only
//! port-1 dummies are entered; ports are interchangeable and are assigned
//! when plans are assembled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::evaluate::{simulate_route, Route};
use crate::instance::NodeKind;
use crate::pten::{ArcKind, NodeId, PtenGraph, DEPOT, SINK};

/// Routes must improve on this to be reported by default.
pub const EPS_RC: f64 = 1e-9;
const EPS: f64 = 1e-9;

/// How labels at the same node prune each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dominance {
    Off,
    /// Classic rule: cheaper and no worse in every resource.
    Exact,
    /// Prunes only labels costing more than the dominator plus `delta`.
    /// Keeps every completion within `delta` of a dominating one.
    Gap(f64),
}

/// Dual information and options for one pricing call.
#[derive(Debug, Clone)]
pub struct PricingContext {
    pub vehicle: usize,
    /// Coverage dual per customer.
    pub cover_dual: Vec<f64>,
    /// Charge on each (station, slot) usage, non-negative.
    pub usage_dual: Vec<Vec<f64>>,
    /// Weight on the follower route cost.
    pub cost_weight: f64,
    /// Weight on the leader route cost (negative revenue).
    pub revenue_weight: f64,
    /// Stations that may be used.
    pub open: Vec<bool>,
    /// Completed routes are reported when their reduced cost is below this.
    pub threshold: f64,
    pub dominance: Dominance,
    /// Keep at most this many routes, the cheapest first.
    pub max_routes: Option<usize>,
    /// Abort after creating this many labels.
    pub label_limit: Option<usize>,
    pub trace: bool,
}

impl PricingContext {
    /// Context for plain follower pricing with every open station usable.
    pub fn new(graph: &PtenGraph, vehicle: usize) -> Self {
        let inst = graph.instance();
        PricingContext {
            vehicle,
            cover_dual: vec![0.0; inst.num_customers()],
            usage_dual: (0..inst.num_stations())
                .map(|_| vec![0.0; inst.horizon() as usize])
                .collect(),
            cost_weight: 1.0,
            revenue_weight: 0.0,
            open: vec![true; inst.num_stations()],
            threshold: -EPS_RC,
            dominance: Dominance::Exact,
            max_routes: None,
            label_limit: None,
            trace: false,
        }
    }

    /// Reduced cost of a complete route under this context.
    pub fn reduced_cost(&self, route: &Route) -> f64 {
        let mut phi = self.cost_weight * route.cost + self.revenue_weight * route.csp_cost();
        for (c, g) in self.cover_dual.iter().enumerate() {
            if route.covers(c) {
                phi -= g;
            }
        }
        for slot in &route.charging {
            phi += self.usage_dual[slot.station][slot.t as usize];
        }
        phi
    }
}

/// Resources of a partial path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceVector {
    pub n_visited: u32,
    pub dist: f64,
    pub load: f64,
    /// Net energy drawn from the battery.
    pub energy_used: f64,
    pub departure_time: u32,
    pub tw_ok: bool,
}

#[derive(Debug, Clone)]
pub struct Label {
    pub node: NodeId,
    pub cost: f64,
    pub resources: ResourceVector,
    pub visited: u64,
    /// False right after entering a station until the first charging arc.
    pub can_leave: bool,
    parent: Option<usize>,
}

impl Label {
    fn root(cost: f64) -> Self {
        Label {
            node: DEPOT,
            cost,
            resources: ResourceVector {
                n_visited: 0,
                dist: 0.0,
                load: 0.0,
                energy_used: 0.0,
                departure_time: 0,
                tw_ok: true,
            },
            visited: 0,
            can_leave: true,
            parent: None,
        }
    }
}

/// Extends `label` along the arc from its node to `to`. Returns `None` when a
/// resource bound fails.
pub fn extend(graph: &PtenGraph, ctx: &PricingContext, label: &Label, to: NodeId) -> Option<Label> {
    let arc = *graph.arc(graph.find_arc(label.node, to)?);
    extend_arc(
        graph,
        ctx,
        label,
        usize::MAX,
        arc.kind,
        to,
        arc.distance,
        arc.travel_time,
    )
}

#[allow(clippy::too_many_arguments)]
fn extend_arc(
    graph: &PtenGraph,
    ctx: &PricingContext,
    label: &Label,
    parent: usize,
    kind: ArcKind,
    to: NodeId,
    distance: f64,
    travel_time: u32,
) -> Option<Label> {
    let inst = graph.instance();
    let econ = inst.economics();
    let vt = &inst.vehicle_types()[ctx.vehicle];
    let days = econ.duty_cycles_per_year;
    let r = &label.resources;
    let mut next = label.clone();
    next.node = to;
    next.parent = (parent != usize::MAX).then_some(parent);

    match kind {
        ArcKind::Internal => {
            let NodeKind::StationDummy { station, time, .. } = graph.kind(label.node) else {
                return None;
            };
            let e = inst.slot_energy(station);
            if r.energy_used < e - EPS {
                return None;
            }
            let fee = inst.service_fee(station);
            let price = inst.stations()[station].electricity_price[time as usize];
            next.resources.energy_used = (r.energy_used - e).max(0.0);
            next.resources.departure_time = time + 1;
            next.resources.n_visited += 1;
            next.can_leave = true;
            next.cost += ctx.cost_weight * days * (price + fee) * e
                - ctx.revenue_weight * days * fee * e
                + ctx.usage_dual[station][time as usize];
            Some(next)
        }
        ArcKind::External => {
            if !label.can_leave {
                return None;
            }
            let energy = r.energy_used + vt.consumption_rate * distance;
            if energy > vt.battery_capacity + EPS {
                return None;
            }
            let dist = r.dist + distance;
            if econ.max_route_length.is_some_and(|cap| dist > cap + EPS) {
                return None;
            }
            let arrival = r.departure_time + travel_time;
            next.resources.energy_used = energy;
            next.resources.dist = dist;
            next.resources.n_visited += 1;
            next.cost += ctx.cost_weight * days * vt.travel_cost_per_length * distance;
            match graph.kind(to) {
                NodeKind::Customer(c) => {
                    if label.visited & (1u64 << c) != 0 {
                        return None;
                    }
                    let cust = &inst.customers()[c];
                    let start = arrival.max(cust.window_early);
                    let departure = start + cust.service_time;
                    if departure > cust.window_late {
                        return None;
                    }
                    let load = r.load + cust.demand;
                    if load > vt.freight_capacity + EPS {
                        return None;
                    }
                    next.resources.load = load;
                    next.resources.departure_time = departure;
                    next.visited |= 1u64 << c;
                    next.cost -= ctx.cover_dual[c];
                }
                NodeKind::StationDummy {
                    station,
                    time,
                    port,
                } => {
                    if port != 1 || !ctx.open[station] || arrival > time {
                        return None;
                    }
                    // A station visit must charge at least once.
                    if time + 1 >= inst.station_slots(station)
                        || energy < inst.slot_energy(station) - EPS
                    {
                        return None;
                    }
                    next.resources.departure_time = time;
                    next.can_leave = false;
                }
                NodeKind::DepotSink => {
                    if label.visited == 0 || arrival > inst.horizon() {
                        return None;
                    }
                    next.resources.departure_time = arrival;
                }
                NodeKind::Depot | NodeKind::StationCandidate(_) => return None,
            }
            Some(next)
        }
    }
}

/// Whether a label departing at `time` could still start a charging arc.
fn may_charge(graph: &PtenGraph, ctx: &PricingContext, time: u32) -> bool {
    (0..graph.instance().num_stations())
        .any(|s| ctx.open[s] && graph.instance().station_slots(s) >= time + 2)
}

/// True when `a` makes `b` redundant. `delta` is the cost margin required.
fn dominates_with(
    graph: &PtenGraph,
    ctx: &PricingContext,
    a: &Label,
    b: &Label,
    delta: Option<f64>,
) -> bool {
    if a.node != b.node {
        return false;
    }
    let cost_ok = match delta {
        None => a.cost <= b.cost,
        Some(d) => a.cost + d < b.cost,
    };
    let (ra, rb) = (&a.resources, &b.resources);
    if !cost_ok
        || ra.departure_time > rb.departure_time
        || ra.load > rb.load + EPS
        || a.visited & !b.visited != 0
        || (!a.can_leave && b.can_leave)
    {
        return false;
    }
    if graph.instance().economics().max_route_length.is_some() && ra.dist > rb.dist + EPS {
        return false;
    }
    if may_charge(graph, ctx, rb.departure_time) {
        (ra.energy_used - rb.energy_used).abs() <= EPS
    } else {
        ra.energy_used <= rb.energy_used + EPS
    }
}

/// Label dominance: same node, no more costly, no worse in every resource and
/// a subset of the visited customers.
pub fn dominates(graph: &PtenGraph, ctx: &PricingContext, a: &Label, b: &Label) -> bool {
    dominates_with(graph, ctx, a, b, None)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelStats {
    pub labels_created: usize,
    pub labels_dominated: usize,
    pub labels_extended: usize,
    pub routes_found: usize,
}

#[derive(Debug, Clone)]
pub struct PricedRoute {
    pub route: Route,
    pub reduced_cost: f64,
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Routes below the threshold, cheapest first.
    pub routes: Vec<PricedRoute>,
    /// Smallest reduced cost among complete routes found, `+inf` if none.
    pub best_reduced_cost: f64,
    pub stats: LabelStats,
    /// Cumulative statistics every `WAVE` processed labels when tracing.
    pub waves: Vec<LabelStats>,
    /// Set when the label limit stopped the search early.
    pub truncated: bool,
}

const WAVE: usize = 1000;

struct Queued {
    cost: f64,
    seq: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Solves the pricing problem for one vehicle type.
pub fn solve_pricing(graph: &PtenGraph, ctx: &PricingContext) -> PricingResult {
    let inst = graph.instance();
    let vt = &inst.vehicle_types()[ctx.vehicle];
    let base = ctx.cost_weight * inst.economics().vehicle_crf() * vt.purchase_cost;

    let mut labels: Vec<Label> = vec![Label::root(base)];
    let mut alive: Vec<bool> = vec![true];
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    heap.push(Queued { cost: base, seq: 0 });
    let mut stats = LabelStats {
        labels_created: 1,
        ..Default::default()
    };
    let mut waves = Vec::new();
    let mut complete: Vec<usize> = Vec::new();
    let mut best = f64::INFINITY;
    let mut truncated = false;
    let delta = match ctx.dominance {
        Dominance::Off => None,
        Dominance::Exact => Some(None),
        Dominance::Gap(d) => Some(Some(d)),
    };

    'search: while let Some(Queued { seq, .. }) = heap.pop() {
        if !alive[seq] {
            continue;
        }
        stats.labels_extended += 1;
        if ctx.trace && stats.labels_extended.is_multiple_of(WAVE) {
            waves.push(stats);
        }
        let node = labels[seq].node;
        for &arc_id in graph.out_arcs(node) {
            let arc = *graph.arc(arc_id);
            let Some(next) = extend_arc(
                graph,
                ctx,
                &labels[seq],
                seq,
                arc.kind,
                arc.to,
                arc.distance,
                arc.travel_time,
            ) else {
                continue;
            };
            stats.labels_created += 1;
            if ctx.label_limit.is_some_and(|l| stats.labels_created > l) {
                truncated = true;
                break 'search;
            }
            if arc.to == SINK {
                best = best.min(next.cost);
                if next.cost < ctx.threshold {
                    complete.push(labels.len());
                }
                labels.push(next);
                alive.push(false);
                continue;
            }
            if let Some(margin) = delta {
                let bucket = &mut buckets[arc.to.index()];
                if bucket
                    .iter()
                    .any(|&i| dominates_with(graph, ctx, &labels[i], &next, margin))
                {
                    stats.labels_dominated += 1;
                    continue;
                }
                bucket.retain(|&i| {
                    if dominates_with(graph, ctx, &next, &labels[i], margin) {
                        alive[i] = false;
                        stats.labels_dominated += 1;
                        false
                    } else {
                        true
                    }
                });
                bucket.push(labels.len());
            }
            heap.push(Queued {
                cost: next.cost,
                seq: labels.len(),
            });
            labels.push(next);
            alive.push(true);
        }
    }

    let mut routes: Vec<PricedRoute> = complete
        .into_iter()
        .map(|i| {
            let mut path = Vec::new();
            let mut cur = Some(i);
            while let Some(k) = cur {
                path.push(labels[k].node);
                cur = labels[k].parent;
            }
            path.reverse();
            let route = simulate_route(graph, ctx.vehicle, &path)
                .expect("labels respect every route constraint");
            let reduced_cost = ctx.reduced_cost(&route);
            debug_assert!(
                (reduced_cost - labels[i].cost).abs() <= 1e-6 * reduced_cost.abs().max(1.0),
                "label cost {} vs route {}",
                labels[i].cost,
                reduced_cost
            );
            PricedRoute {
                route,
                reduced_cost,
            }
        })
        .collect();
    routes.sort_by(|a, b| {
        a.reduced_cost
            .total_cmp(&b.reduced_cost)
            .then_with(|| a.route.signature().cmp(&b.route.signature()))
    });
    if let Some(m) = ctx.max_routes {
        routes.truncate(m);
    }
    stats.routes_found = routes.len();
    if ctx.trace {
        waves.push(stats);
        log::debug!(
            "pricing vehicle {}: labels_created={} labels_dominated={} routes_found={}",
            ctx.vehicle,
            stats.labels_created,
            stats.labels_dominated,
            stats.routes_found
        );
    }
    PricingResult {
        routes,
        best_reduced_cost: best,
        stats,
        waves,
        truncated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::bundled;
    use crate::pten::expand;

    #[test]
    fn zero_duals_give_no_improving_route() {
        let g = expand(&bundled("toy").unwrap()).unwrap();
        let res = solve_pricing(&g, &PricingContext::new(&g, 0));
        assert!(res.routes.is_empty());
        assert!(res.best_reduced_cost > 0.0);
    }

    #[test]
    fn large_duals_find_the_charging_route() {
        let g = expand(&bundled("toy").unwrap()).unwrap();
        let mut ctx = PricingContext::new(&g, 0);
        ctx.cover_dual = vec![1e5, 1e5];
        let res = solve_pricing(&g, &ctx);
        let best = &res.routes[0];
        assert_eq!(best.route.num_customers(), 2);
        assert!(!best.route.charging.is_empty());
        assert!((best.reduced_cost - res.best_reduced_cost).abs() < 1e-9);
    }

    #[test]
    fn depot_to_customer_extension() {
        let g = expand(&bundled("toy").unwrap()).unwrap();
        let ctx = PricingContext::new(&g, 0);
        let l = extend(&g, &ctx, &Label::root(0.0), g.customer_node(0)).unwrap();
        assert_eq!(l.resources.load, g.instance().customers()[0].demand);
        assert_eq!(l.visited, 1);
    }

    #[test]
    fn cannot_arrive_at_a_past_slot() {
        let g = expand(&bundled("toy").unwrap()).unwrap();
        let ctx = PricingContext::new(&g, 0);
        let at_c1 = extend(&g, &ctx, &Label::root(0.0), g.customer_node(0)).unwrap();
        assert!(extend(&g, &ctx, &at_c1, g.dummy(0, 1, 1).unwrap()).is_none());
        assert!(extend(&g, &ctx, &at_c1, g.dummy(0, 2, 1).unwrap()).is_some());
    }

    #[test]
    fn dominance_examples() {
        let g = expand(&bundled("toy").unwrap()).unwrap();
        let ctx = PricingContext::new(&g, 0);
        let a = extend(&g, &ctx, &Label::root(0.0), g.customer_node(0)).unwrap();
        assert!(dominates(&g, &ctx, &a, &a.clone()));

        let mut cheaper_more_energy = a.clone();
        cheaper_more_energy.cost -= 1.0;
        cheaper_more_energy.resources.energy_used += 5.0;
        assert!(!dominates(&g, &ctx, &cheaper_more_energy, &a));
        assert!(!dominates(&g, &ctx, &a, &cheaper_more_energy));

        let mut superset = a.clone();
        superset.visited |= 0b10;
        assert!(dominates(&g, &ctx, &a, &superset));
        assert!(!dominates(&g, &ctx, &superset, &a));
    }
}
