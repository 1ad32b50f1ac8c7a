//! Partial time-expanded network.
//!
//! Every candidate station is replaced by a grid of dummy nodes, one per
//! (time slot, port). Charging for one time step is a traversal of an
//! internal arc between consecutive slots of the same port. The depot gets
//! a sink copy so that routes are paths.

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::{Instance, NodeKind};

#[derive(Debug, Error, PartialEq)]
pub enum PtenError {
    #[error("station {0} has size_max = 0 and cannot be expanded")]
    Capacity(String),
    #[error("unknown station index {0}")]
    UnknownStation(usize),
    #[error("time step {t} outside the horizon {horizon}")]
    TimeOutOfRange { t: u32, horizon: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    External,
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtenArc {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: ArcKind,
    pub distance: f64,
    pub travel_time: u32,
}

#[derive(Debug, Clone)]
pub struct PtenGraph {
    instance: Instance,
    nodes: Vec<NodeKind>,
    arcs: Vec<PtenArc>,
    out: Vec<Vec<ArcId>>,
    /// First dummy node of each station; dummies are laid out port-major.
    station_base: Vec<u32>,
    /// Internal arcs by station and start slot.
    internal: Vec<Vec<Vec<ArcId>>>,
}

pub const DEPOT: NodeId = NodeId(0);
pub const SINK: NodeId = NodeId(1);

/// Builds the expanded network of `instance`.
pub fn expand(instance: &Instance) -> Result<PtenGraph, PtenError> {
    for s in instance.stations() {
        if s.size_max == 0 {
            return Err(PtenError::Capacity(s.id.clone()));
        }
    }
    let n_cust = instance.num_customers();
    let mut nodes = vec![NodeKind::Depot, NodeKind::DepotSink];
    nodes.extend((0..n_cust).map(NodeKind::Customer));
    let mut station_base = Vec::with_capacity(instance.num_stations());
    for (i, st) in instance.stations().iter().enumerate() {
        station_base.push(nodes.len() as u32);
        let slots = instance.station_slots(i);
        for port in 1..=st.size_max {
            for time in 0..slots {
                nodes.push(NodeKind::StationDummy {
                    station: i,
                    time,
                    port,
                });
            }
        }
    }

    let mut g = PtenGraph {
        instance: instance.clone(),
        out: vec![Vec::new(); nodes.len()],
        nodes,
        arcs: Vec::new(),
        station_base,
        internal: Vec::new(),
    };

    let customer = |c: usize| NodeId(2 + c as u32);
    let depot_site = instance.depot_site();

    // Depot and customer arcs.
    for c in 0..n_cust {
        if let Some(l) = instance.link(depot_site, instance.customer_site(c)) {
            g.push(
                DEPOT,
                customer(c),
                ArcKind::External,
                l.distance,
                l.travel_time,
            );
        }
    }
    for a in 0..n_cust {
        for b in 0..n_cust {
            if a == b {
                continue;
            }
            if let Some(l) = instance.link(instance.customer_site(a), instance.customer_site(b)) {
                g.push(
                    customer(a),
                    customer(b),
                    ArcKind::External,
                    l.distance,
                    l.travel_time,
                );
            }
        }
        if let Some(l) = instance.link(instance.customer_site(a), depot_site) {
            g.push(
                customer(a),
                SINK,
                ArcKind::External,
                l.distance,
                l.travel_time,
            );
        }
    }

    // Station arcs: into every dummy from depot/customers, out of every
    // dummy to customers/sink, and the internal charging arcs.
    for i in 0..instance.num_stations() {
        let site = instance.station_site(i);
        let ports = instance.stations()[i].size_max;
        let slots = instance.station_slots(i);
        let mut by_slot = vec![Vec::new(); slots as usize];
        for port in 1..=ports {
            for t in 0..slots {
                let d = g.dummy(i, t, port).expect("dummy in range");
                if let Some(l) = instance.link(depot_site, site) {
                    g.push(DEPOT, d, ArcKind::External, l.distance, l.travel_time);
                }
                for c in 0..n_cust {
                    if let Some(l) = instance.link(instance.customer_site(c), site) {
                        g.push(customer(c), d, ArcKind::External, l.distance, l.travel_time);
                        g.push(d, customer(c), ArcKind::External, l.distance, l.travel_time);
                    }
                }
                if let Some(l) = instance.link(site, depot_site) {
                    g.push(d, SINK, ArcKind::External, l.distance, l.travel_time);
                }
                if t + 1 < slots {
                    let next = g.dummy(i, t + 1, port).expect("dummy in range");
                    let id = g.push(d, next, ArcKind::Internal, 0.0, 1);
                    by_slot[t as usize].push(id);
                }
            }
        }
        g.internal.push(by_slot);
    }
    Ok(g)
}

impl PtenGraph {
    fn push(
        &mut self,
        from: NodeId,
        to: NodeId,
        kind: ArcKind,
        distance: f64,
        travel_time: u32,
    ) -> ArcId {
        let id = ArcId(self.arcs.len() as u32);
        self.arcs.push(PtenArc {
            from,
            to,
            kind,
            distance,
            travel_time,
        });
        self.out[from.index()].push(id);
        id
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        self.nodes[node.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeKind)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, k)| (NodeId(i as u32), *k))
    }

    pub fn arc(&self, id: ArcId) -> &PtenArc {
        &self.arcs[id.0 as usize]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (ArcId, &PtenArc)> {
        self.arcs
            .iter()
            .enumerate()
            .map(|(i, a)| (ArcId(i as u32), a))
    }

    pub fn out_arcs(&self, node: NodeId) -> &[ArcId] {
        &self.out[node.index()]
    }

    /// Arc from `from` to `to`, if one exists.
    pub fn find_arc(&self, from: NodeId, to: NodeId) -> Option<ArcId> {
        self.out[from.index()]
            .iter()
            .copied()
            .find(|&a| self.arcs[a.0 as usize].to == to)
    }

    pub fn customer_node(&self, c: usize) -> NodeId {
        NodeId(2 + c as u32)
    }

    /// Dummy node of `station` at slot `time` on `port` (1-based).
    pub fn dummy(&self, station: usize, time: u32, port: u32) -> Option<NodeId> {
        let st = self.instance.stations().get(station)?;
        let slots = self.instance.station_slots(station);
        if port == 0 || port > st.size_max || time >= slots {
            return None;
        }
        Some(NodeId(
            self.station_base[station] + (port - 1) * slots + time,
        ))
    }

    pub fn dummies_of(&self, station: usize) -> impl Iterator<Item = NodeId> + '_ {
        let n = self.instance.stations()[station].size_max * self.instance.station_slots(station);
        let base = self.station_base[station];
        (base..base + n).map(NodeId)
    }

    pub fn internal_arcs(&self, station: usize) -> impl Iterator<Item = ArcId> + '_ {
        self.internal[station].iter().flatten().copied()
    }

    /// Human-readable label such as `C1`, `D0'` or `F1-1-2` (station-port-time).
    pub fn node_name(&self, node: NodeId) -> String {
        let inst = &self.instance;
        match self.kind(node) {
            NodeKind::Depot => inst.site_name(inst.depot_site()).to_string(),
            NodeKind::DepotSink => format!("{}'", inst.site_name(inst.depot_site())),
            NodeKind::Customer(c) => inst.customers()[c].id.clone(),
            NodeKind::StationCandidate(s) => inst.stations()[s].id.clone(),
            NodeKind::StationDummy {
                station,
                time,
                port,
            } => {
                format!("{}-{}-{}", inst.stations()[station].id, port, time)
            }
        }
    }

    /// Line-oriented listing of all nodes and arcs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, kind) in self.nodes() {
            let (k, t, p) = match kind {
                NodeKind::Depot => ("depot", None, None),
                NodeKind::DepotSink => ("sink", None, None),
                NodeKind::Customer(_) => ("customer", None, None),
                NodeKind::StationCandidate(_) => ("station", None, None),
                NodeKind::StationDummy { time, port, .. } => ("dummy", Some(time), Some(port)),
            };
            let show = |v: Option<u32>| v.map_or("-".to_string(), |v| v.to_string());
            let _ = writeln!(
                out,
                "node {} kind={} t={} p={} name={}",
                id.0,
                k,
                show(t),
                show(p),
                self.node_name(id)
            );
        }
        for (_, a) in self.arcs() {
            let kind = match a.kind {
                ArcKind::External => "external",
                ArcKind::Internal => "internal",
            };
            let _ = writeln!(
                out,
                "arc {} {} kind={} d={} tt={}",
                a.from.0, a.to.0, kind, a.distance, a.travel_time
            );
        }
        out
    }
}

/// Internal arcs of `station` that start at slot `t`.
pub fn arcs_at(graph: &PtenGraph, station: usize, t: u32) -> Result<Vec<ArcId>, PtenError> {
    let by_slot = graph
        .internal
        .get(station)
        .ok_or(PtenError::UnknownStation(station))?;
    let horizon = graph.instance.horizon();
    if t >= horizon {
        return Err(PtenError::TimeOutOfRange { t, horizon });
    }
    Ok(by_slot.get(t as usize).cloned().unwrap_or_default())
}

/// Energy delivered by `count` charging arcs.
pub fn charged_energy(count: u32, rated_power: f64, dt_hours: f64) -> f64 {
    rated_power * dt_hours * f64::from(count)
}
