//! Problem data: customers, candidate stations, vehicle types, economics and
//! the undirected edge list, loaded from a versioned JSON document.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
/// Visited customers are tracked as a 64-bit set.
pub const MAX_CUSTOMERS: usize = 64;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("unknown bundled instance `{0}`")]
    UnknownBundled(String),
}

#[derive(Debug, Error, PartialEq)]
#[error("capital recovery factor undefined for rate {rate} and {years} years")]
pub struct DomainError {
    pub rate: f64,
    pub years: u32,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Kind of a node, shared between the base graph and the expanded network.
/// Base instances only hold `Depot`, `Customer` and `StationCandidate`;
/// the sink and the dummies appear after expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Depot,
    DepotSink,
    Customer(usize),
    StationCandidate(usize),
    StationDummy {
        station: usize,
        time: u32,
        port: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    pub discount_rate: f64,
    pub station_life_years: u32,
    pub vehicle_life_years: u32,
    /// Service fee per station, in station order ($/kWh).
    pub service_fee: Vec<f64>,
    pub time_step_hours: f64,
    pub horizon: u32,
    /// Number of times the daily plan runs per year. Operating costs and
    /// charging revenue are scaled by it so they are comparable with the
    /// annualized capital costs.
    #[serde(default = "one")]
    pub duty_cycles_per_year: f64,
    /// Optional cap on route length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_route_length: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Economics {
    pub fn station_crf(&self) -> f64 {
        capital_recovery_factor(self.discount_rate, self.station_life_years)
            .expect("validated economics")
    }

    pub fn vehicle_crf(&self) -> f64 {
        capital_recovery_factor(self.discount_rate, self.vehicle_life_years)
            .expect("validated economics")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Depot {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: String,
    pub demand: f64,
    pub window_early: u32,
    pub window_late: u32,
    #[serde(default)]
    pub service_time: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationCandidate {
    pub id: String,
    /// Substation headroom per time step (kW).
    pub grid_capacity: Vec<f64>,
    pub rated_power: f64,
    pub port_cost: f64,
    /// Transformer upgrade cost ($/kW).
    pub upgrade_cost: f64,
    pub electricity_price: Vec<f64>,
    pub size_min: u32,
    pub size_max: u32,
    /// Number of consecutive visiting slots starting at 0; all steps if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible_slots: Option<u32>,
}

impl StationCandidate {
    pub fn min_grid_capacity(&self) -> f64 {
        self.grid_capacity
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleType {
    pub id: u32,
    pub freight_capacity: f64,
    pub battery_capacity: f64,
    /// Energy per unit length (kWh).
    pub consumption_rate: f64,
    pub purchase_cost: f64,
    pub travel_cost_per_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub distance: f64,
    pub travel_time: u32,
}

/// On-disk layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: u32,
    pub meta: Meta,
    pub economics: Economics,
    pub depot: Depot,
    pub customers: Vec<Customer>,
    pub stations: Vec<StationCandidate>,
    pub vehicle_types: Vec<VehicleType>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub distance: f64,
    pub travel_time: u32,
}

/// A validated, immutable problem instance.
///
/// Sites are indexed `0` (depot), `1..=n` (customers), then stations.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    file: InstanceFile,
    links: Vec<Option<Link>>,
}

impl Instance {
    pub fn from_file(file: InstanceFile) -> Result<Self, InstanceError> {
        validate(&file)?;
        let links = build_links(&file);
        let inst = Instance { file, links };
        inst.check_reachability()?;
        inst.warn_triangle();
        Ok(inst)
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("instance serializes")
    }

    pub fn file(&self) -> &InstanceFile {
        &self.file
    }

    pub fn name(&self) -> &str {
        &self.file.meta.name
    }

    pub fn economics(&self) -> &Economics {
        &self.file.economics
    }

    pub fn customers(&self) -> &[Customer] {
        &self.file.customers
    }

    pub fn stations(&self) -> &[StationCandidate] {
        &self.file.stations
    }

    pub fn vehicle_types(&self) -> &[VehicleType] {
        &self.file.vehicle_types
    }

    pub fn horizon(&self) -> u32 {
        self.file.economics.horizon
    }

    pub fn num_customers(&self) -> usize {
        self.file.customers.len()
    }

    pub fn num_stations(&self) -> usize {
        self.file.stations.len()
    }

    pub fn num_sites(&self) -> usize {
        1 + self.num_customers() + self.num_stations()
    }

    pub fn depot_site(&self) -> usize {
        0
    }

    pub fn customer_site(&self, c: usize) -> usize {
        1 + c
    }

    pub fn station_site(&self, s: usize) -> usize {
        1 + self.num_customers() + s
    }

    pub fn site_kind(&self, site: usize) -> NodeKind {
        let n = self.num_customers();
        if site == 0 {
            NodeKind::Depot
        } else if site <= n {
            NodeKind::Customer(site - 1)
        } else {
            NodeKind::StationCandidate(site - 1 - n)
        }
    }

    pub fn site_name(&self, site: usize) -> &str {
        match self.site_kind(site) {
            NodeKind::Depot => &self.file.depot.id,
            NodeKind::Customer(c) => &self.file.customers[c].id,
            NodeKind::StationCandidate(s) => &self.file.stations[s].id,
            _ => unreachable!("base sites only"),
        }
    }

    pub fn customer_index(&self, name: &str) -> Option<usize> {
        self.file.customers.iter().position(|c| c.id == name)
    }

    pub fn station_index(&self, name: &str) -> Option<usize> {
        self.file.stations.iter().position(|s| s.id == name)
    }

    pub fn vehicle_index(&self, id: u32) -> Option<usize> {
        self.file.vehicle_types.iter().position(|v| v.id == id)
    }

    /// Declared link between two sites (either direction).
    pub fn link(&self, a: usize, b: usize) -> Option<Link> {
        self.links[a * self.num_sites() + b]
    }

    pub fn service_fee(&self, station: usize) -> f64 {
        self.file.economics.service_fee[station]
    }

    /// Slots in which station `s` can be visited.
    pub fn station_slots(&self, s: usize) -> u32 {
        self.file.stations[s]
            .feasible_slots
            .unwrap_or(self.horizon())
            .min(self.horizon())
    }

    /// Energy delivered by one port during one time step (kWh).
    pub fn slot_energy(&self, s: usize) -> f64 {
        self.file.stations[s].rated_power * self.file.economics.time_step_hours
    }

    pub fn with_overrides(&self, patch: &InstancePatch) -> Result<Instance, InstanceError> {
        let mut file = self.file.clone();
        if let Some(fees) = &patch.service_fee {
            for (name, fee) in fees {
                let s = self
                    .station_index(name)
                    .ok_or_else(|| invalid("service_fee", format!("unknown station {name}")))?;
                file.economics.service_fee[s] = *fee;
            }
        }
        if let Some(fee) = patch.uniform_service_fee {
            for f in file.economics.service_fee.iter_mut() {
                *f = fee;
            }
        }
        for (name, (early, late)) in &patch.customer_windows {
            let c = self
                .customer_index(name)
                .ok_or_else(|| invalid("customer_windows", format!("unknown customer {name}")))?;
            file.customers[c].window_early = *early;
            file.customers[c].window_late = *late;
        }
        for (name, power) in &patch.rated_power {
            let s = self
                .station_index(name)
                .ok_or_else(|| invalid("rated_power", format!("unknown station {name}")))?;
            file.stations[s].rated_power = *power;
        }
        for (name, cost) in &patch.port_cost {
            let s = self
                .station_index(name)
                .ok_or_else(|| invalid("port_cost", format!("unknown station {name}")))?;
            file.stations[s].port_cost = *cost;
        }
        Instance::from_file(file)
    }

    fn check_reachability(&self) -> Result<(), InstanceError> {
        let n = self.num_sites();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for b in 0..n {
                if !seen[b] && self.link(a, b).is_some() {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        for c in 0..self.num_customers() {
            if !seen[self.customer_site(c)] {
                return Err(invalid(
                    "edges",
                    format!(
                        "customer {} is not reachable from the depot",
                        self.file.customers[c].id
                    ),
                ));
            }
        }
        Ok(())
    }

    fn warn_triangle(&self) {
        let n = self.num_sites();
        for a in 0..n {
            for b in 0..n {
                let Some(ab) = self.link(a, b) else { continue };
                for c in 0..n {
                    if let (Some(ac), Some(cb)) = (self.link(a, c), self.link(c, b)) {
                        if ac.distance + cb.distance < ab.distance - 1e-9 {
                            log::warn!(
                                "triangle inequality violated: {}-{} longer than via {}",
                                self.site_name(a),
                                self.site_name(b),
                                self.site_name(c)
                            );
                            return;
                        }
                    }
                }
            }
        }
    }
}

/// Scenario knobs that sweeps and studies may change on a base instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstancePatch {
    pub service_fee: Option<BTreeMap<String, f64>>,
    /// Applied after `service_fee`, to every station.
    pub uniform_service_fee: Option<f64>,
    pub customer_windows: BTreeMap<String, (u32, u32)>,
    pub rated_power: BTreeMap<String, f64>,
    pub port_cost: BTreeMap<String, f64>,
}

impl InstancePatch {
    pub fn fee(fee: f64) -> Self {
        InstancePatch {
            uniform_service_fee: Some(fee),
            ..Default::default()
        }
    }
}

/// Annualizes a capital cost: `r (1+r)^Y / ((1+r)^Y - 1)`.
pub fn capital_recovery_factor(rate: f64, years: u32) -> Result<f64, DomainError> {
    if !(rate > 0.0) || years < 1 || !rate.is_finite() {
        return Err(DomainError { rate, years });
    }
    let g = (1.0 + rate).powi(years as i32);
    Ok(rate * g / (g - 1.0))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Instance::parse(&text)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    fs::write(path, instance.to_json()).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

const BUNDLED: &[(&str, &str)] = &[
    ("toy", include_str!("../instances/toy.json")),
    ("small_base", include_str!("../instances/small_base.json")),
    ("small_tw", include_str!("../instances/small_tw.json")),
    (
        "small_rate15",
        include_str!("../instances/small_rate15.json"),
    ),
    (
        "small_rate20",
        include_str!("../instances/small_rate20.json"),
    ),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// One of the instances shipped with the crate, by name (with or without
/// the `.json` suffix).
pub fn bundled(name: &str) -> Result<Instance, InstanceError> {
    let key = name.trim_end_matches(".json");
    BUNDLED
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| InstanceError::UnknownBundled(name.to_string()))
        .and_then(|(_, text)| Instance::parse(text))
}

fn build_links(file: &InstanceFile) -> Vec<Option<Link>> {
    let names = site_names(file);
    let n = names.len();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut links = vec![None; n * n];
    for e in &file.edges {
        let a = index[e.from.as_str()];
        let b = index[e.to.as_str()];
        let link = Some(Link {
            distance: e.distance,
            travel_time: e.travel_time,
        });
        links[a * n + b] = link;
        links[b * n + a] = link;
    }
    links
}

fn site_names(file: &InstanceFile) -> Vec<&str> {
    std::iter::once(file.depot.id.as_str())
        .chain(file.customers.iter().map(|c| c.id.as_str()))
        .chain(file.stations.iter().map(|s| s.id.as_str()))
        .collect()
}

fn validate(file: &InstanceFile) -> Result<(), InstanceError> {
    if file.schema != SCHEMA_VERSION {
        return Err(invalid(
            "schema",
            format!("expected {SCHEMA_VERSION}, found {}", file.schema),
        ));
    }
    let e = &file.economics;
    if !(e.discount_rate > 0.0 && e.discount_rate < 1.0) {
        return Err(invalid("economics.discount_rate", "must lie in (0, 1)"));
    }
    if e.station_life_years < 1 {
        return Err(invalid(
            "economics.station_life_years",
            "must be at least 1",
        ));
    }
    if e.vehicle_life_years < 1 {
        return Err(invalid(
            "economics.vehicle_life_years",
            "must be at least 1",
        ));
    }
    if e.horizon < 1 {
        return Err(invalid("economics.horizon", "must be at least 1"));
    }
    if !(e.time_step_hours > 0.0) {
        return Err(invalid("economics.time_step_hours", "must be positive"));
    }
    if !(e.duty_cycles_per_year > 0.0) {
        return Err(invalid(
            "economics.duty_cycles_per_year",
            "must be positive",
        ));
    }
    if let Some(d) = e.max_route_length {
        if !(d > 0.0) {
            return Err(invalid("economics.max_route_length", "must be positive"));
        }
    }
    if e.service_fee.len() != file.stations.len() {
        return Err(invalid(
            "economics.service_fee",
            "needs one entry per station",
        ));
    }
    if e.service_fee.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
        return Err(invalid(
            "economics.service_fee",
            "fees must be finite and non-negative",
        ));
    }

    let names = site_names(file);
    let mut seen = HashSet::new();
    for n in &names {
        if n.is_empty() || !seen.insert(*n) {
            return Err(invalid("id", format!("duplicate or empty node id `{n}`")));
        }
    }
    if file.customers.len() > MAX_CUSTOMERS {
        return Err(invalid(
            "customers",
            format!("at most {MAX_CUSTOMERS} customers supported"),
        ));
    }

    let horizon = e.horizon;
    for c in &file.customers {
        let f = |k: &str| format!("customers[{}].{k}", c.id);
        if !(c.demand >= 0.0) || !c.demand.is_finite() {
            return Err(invalid(f("demand"), "must be non-negative"));
        }
        if c.window_early > c.window_late {
            return Err(invalid(f("window_early"), "exceeds window_late"));
        }
        if c.window_late > horizon {
            return Err(invalid(f("window_late"), "exceeds the horizon"));
        }
    }

    for s in &file.stations {
        let f = |k: &str| format!("stations[{}].{k}", s.id);
        if s.size_max == 0 {
            // Expansion refuses such stations; loading them is allowed so the
            // error surfaces where the graph is built.
        }
        if s.size_min > s.size_max {
            return Err(invalid(f("size_min"), "exceeds size_max"));
        }
        if !(s.rated_power > 0.0) || !s.rated_power.is_finite() {
            return Err(invalid(f("rated_power"), "must be positive"));
        }
        if !(s.port_cost >= 0.0) || !(s.upgrade_cost >= 0.0) {
            return Err(invalid(f("port_cost"), "costs must be non-negative"));
        }
        if s.grid_capacity.len() != horizon as usize {
            return Err(invalid(f("grid_capacity"), "length must equal the horizon"));
        }
        if s.electricity_price.len() != horizon as usize {
            return Err(invalid(
                f("electricity_price"),
                "length must equal the horizon",
            ));
        }
        if s.grid_capacity.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid(f("grid_capacity"), "must be non-negative"));
        }
        if s.electricity_price.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid(
                f("electricity_price"),
                "prices must be non-negative",
            ));
        }
        if let Some(slots) = s.feasible_slots {
            if slots > horizon {
                return Err(invalid(f("feasible_slots"), "exceeds the horizon"));
            }
        }
    }

    if file.vehicle_types.is_empty() {
        return Err(invalid(
            "vehicle_types",
            "at least one vehicle type is required",
        ));
    }
    let mut ids = HashSet::new();
    for v in &file.vehicle_types {
        let f = |k: &str| format!("vehicle_types[{}].{k}", v.id);
        if !ids.insert(v.id) {
            return Err(invalid(f("id"), "duplicate vehicle type id"));
        }
        for (k, val) in [
            ("freight_capacity", v.freight_capacity),
            ("battery_capacity", v.battery_capacity),
            ("consumption_rate", v.consumption_rate),
            ("purchase_cost", v.purchase_cost),
            ("travel_cost_per_length", v.travel_cost_per_length),
        ] {
            if !(val > 0.0) || !val.is_finite() {
                return Err(invalid(f(k), "must be strictly positive"));
            }
        }
    }

    let index: HashSet<&str> = names.iter().copied().collect();
    let mut pairs = HashSet::new();
    for (k, edge) in file.edges.iter().enumerate() {
        let f = |field: &str| format!("edges[{k}].{field}");
        if !index.contains(edge.from.as_str()) {
            return Err(invalid(f("from"), format!("unknown node `{}`", edge.from)));
        }
        if !index.contains(edge.to.as_str()) {
            return Err(invalid(f("to"), format!("unknown node `{}`", edge.to)));
        }
        if edge.from == edge.to {
            return Err(invalid(f("to"), "self loops are not allowed"));
        }
        if !(edge.distance > 0.0) || !edge.distance.is_finite() {
            return Err(invalid(f("distance"), "must be positive"));
        }
        if edge.travel_time < 1 {
            return Err(invalid(f("travel_time"), "must be at least one time step"));
        }
        let key = if edge.from < edge.to {
            (edge.from.as_str(), edge.to.as_str())
        } else {
            (edge.to.as_str(), edge.from.as_str())
        };
        if !pairs.insert(key) {
            return Err(invalid(f("to"), "duplicate edge"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crf_known_values() {
        assert!((capital_recovery_factor(0.05, 10).unwrap() - 0.129_504_574_6).abs() < 1e-9);
        assert!((capital_recovery_factor(0.08, 15).unwrap() - 0.116_829_544_6).abs() < 1e-9);
        for r in [0.01, 0.05, 0.3, 0.99] {
            assert!((capital_recovery_factor(r, 1).unwrap() - (1.0 + r)).abs() < 1e-12);
        }
    }

    #[test]
    fn crf_domain_errors() {
        assert!(capital_recovery_factor(0.0, 5).is_err());
        assert!(capital_recovery_factor(-0.1, 5).is_err());
        assert!(capital_recovery_factor(0.05, 0).is_err());
    }

    #[test]
    fn bundled_instances_load() {
        for name in bundled_names() {
            bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let base = bundled("small_base.json").unwrap();
        assert_eq!(base.num_customers(), 5);
        assert_eq!(base.num_stations(), 2);
        assert_eq!(base.vehicle_types().len(), 2);
        let toy = bundled("toy").unwrap();
        assert_eq!(toy.num_customers(), 2);
        assert_eq!(toy.num_stations(), 1);
        let v = &toy.vehicle_types()[0];
        assert_eq!(v.battery_capacity / v.consumption_rate, 4.0);
    }

    #[test]
    fn inverted_window_is_rejected() {
        let mut file = bundled("toy").unwrap().file().clone();
        file.customers[0].window_early = 6;
        file.customers[0].window_late = 2;
        match Instance::from_file(file) {
            Err(InstanceError::Validation { field, .. }) => assert!(field.contains("window_early")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_customer_is_rejected() {
        let mut file = bundled("toy").unwrap().file().clone();
        let c2 = file.customers[1].id.clone();
        file.edges.retain(|e| e.from != c2 && e.to != c2);
        assert!(matches!(
            Instance::from_file(file),
            Err(InstanceError::Validation { .. })
        ));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            Instance::parse("{ not json"),
            Err(InstanceError::Parse(_))
        ));
    }

    #[test]
    fn overrides_touch_only_the_patched_fields() {
        let base = bundled("small_base").unwrap();
        let same = base.with_overrides(&InstancePatch::default()).unwrap();
        assert_eq!(same, base);

        let fee = base.with_overrides(&InstancePatch::fee(0.125)).unwrap();
        assert_eq!(fee.economics().service_fee, vec![0.125, 0.125]);
        let mut expected = base.file().clone();
        expected.economics.service_fee = vec![0.125, 0.125];
        assert_eq!(fee.file(), &expected);

        let mut patch = InstancePatch::default();
        for (c, w) in [("B", (1, 4)), ("C", (6, 9)), ("D", (2, 3))] {
            patch.customer_windows.insert(c.to_string(), w);
        }
        let tw = base.with_overrides(&patch).unwrap();
        let c = tw.customer_index("C").unwrap();
        assert_eq!(
            (
                tw.customers()[c].window_early,
                tw.customers()[c].window_late
            ),
            (6, 9)
        );
        // Base unchanged.
        assert_ne!(base.customers()[c].window_late, 9);
    }

    #[test]
    fn overrides_are_revalidated() {
        let base = bundled("toy").unwrap();
        let mut patch = InstancePatch::default();
        patch.customer_windows.insert("C1".into(), (5, 1));
        assert!(base.with_overrides(&patch).is_err());
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = std::env::temp_dir().join(format!("elrp-inst-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("base.json");
        let base = bundled("small_base").unwrap();
        save_instance(&base, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), base);
        std::fs::remove_dir_all(&dir).ok();
    }
}
