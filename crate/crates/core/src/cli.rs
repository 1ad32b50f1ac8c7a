//! Batch experiments: single solves, fee sweeps, charging-rate studies and
//! oracle cross-checks, each writing plot-ready CSV files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ccg::{run_ccg, BilevelSolution, CcgError, CcgIteration, CcgOptions};
use crate::colgen::{solve_master, ColumnPool, IterationLog, MasterSpec};
use crate::evaluate::{fo_cost, FleetPlan, LeaderDecision};
use crate::instance::{bundled, load_instance, Instance, InstanceError, InstancePatch, NodeKind};
use crate::oracle::{bilevel_exhaustive, EnumerationBudget, OracleError};
use crate::pten::{expand, PtenError, PtenGraph};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Graph(#[from] PtenError),
    #[error(transparent)]
    Solver(#[from] CcgError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("solver disagrees with enumeration: {0}")]
    Mismatch(String),
    #[error("{0}")]
    PointsFailed(String),
}

impl CliError {
    /// Process exit code: 2 for usage and I/O problems, 1 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Instance(_) | CliError::Io { .. } | CliError::Csv(_) => {
                2
            }
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    FeeSweep,
    RateStudy,
    OracleCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Path to an instance file, or the name of a bundled instance.
    pub instance: String,
    pub mode: Mode,
    /// Uniform service fee for solve, rate-study and oracle-check runs.
    pub fee: Option<f64>,
    pub fees: Vec<f64>,
    pub rates: Vec<f64>,
    /// Per-port cost matching each entry of `rates`; empty keeps the instance's cost.
    pub rate_port_costs: Vec<f64>,
    pub rate_station: String,
    pub out_dir: PathBuf,
    pub epsilon: f64,
    pub jobs: usize,
    pub trace: bool,
}

impl ExperimentSpec {
    pub fn new(instance: impl Into<String>, mode: Mode) -> Self {
        ExperimentSpec {
            instance: instance.into(),
            mode,
            fee: None,
            fees: default_fee_grid(),
            rates: vec![10.0, 15.0, 20.0],
            rate_port_costs: Vec::new(),
            rate_station: "F2".into(),
            out_dir: PathBuf::from("out"),
            epsilon: 1e-4,
            jobs: 4,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(f) = self
            .fees
            .iter()
            .chain(&self.fee)
            .find(|f| !(0.0..=10.0).contains(*f))
        {
            return Err(CliError::Usage(format!("fee {f} outside [0, 10]")));
        }
        if self.fees.is_empty() && self.mode == Mode::FeeSweep {
            return Err(CliError::Usage("empty fee grid".into()));
        }
        if self.rates.iter().any(|r| !(*r > 0.0)) {
            return Err(CliError::Usage("rates must be positive".into()));
        }
        if !self.rate_port_costs.is_empty() && self.rate_port_costs.len() != self.rates.len() {
            return Err(CliError::Usage("need one port cost per rate".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(CliError::Usage("epsilon must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn ccg_options(&self) -> CcgOptions {
        let mut o = CcgOptions {
            epsilon: self.epsilon,
            ..CcgOptions::default()
        };
        o.colgen.trace = self.trace;
        o
    }

    pub fn load(&self) -> Result<Instance, CliError> {
        let inst = resolve_instance(&self.instance)?;
        Ok(match self.fee {
            Some(f) => inst.with_overrides(&InstancePatch::fee(f))?,
            None => inst,
        })
    }
}

/// Fees 0.00 to 0.50 in steps of 0.05.
pub fn default_fee_grid() -> Vec<f64> {
    (0..=10).map(|k| round6(k as f64 * 0.05)).collect()
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Parses `a:b:step` ranges and plain values, comma separated.
pub fn parse_fee_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse fee grid {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<f64> = part
            .split(':')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match nums.as_slice() {
            [v] => out.push(*v),
            [a, b, step] if *step > 0.0 && b >= a => {
                let n = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| round6(a + k as f64 * step)));
            }
            _ => return Err(bad()),
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Parses a comma-separated list of positive numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse number {v:?}")))
        })
        .collect()
}

/// Loads a file path, falling back to the bundled instance of that name.
pub fn resolve_instance(name: &str) -> Result<Instance, CliError> {
    let path = Path::new(name);
    if path.exists() {
        return Ok(load_instance(path)?);
    }
    match bundled(name) {
        Ok(inst) => Ok(inst),
        Err(InstanceError::UnknownBundled(_)) => {
            Err(CliError::Instance(load_instance(path).unwrap_err()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Hash of the leader decision and the multiset of routes.
pub fn strategy_signature(
    graph: &PtenGraph,
    decision: &LeaderDecision,
    plan: &FleetPlan,
) -> String {
    let inst = graph.instance();
    let mut routes: Vec<String> = plan
        .routes
        .iter()
        .map(|r| {
            let nodes: Vec<String> = r.nodes().map(|n| graph.node_name(n)).collect();
            format!("{}:{}", inst.vehicle_types()[r.vehicle].id, nodes.join("-"))
        })
        .collect();
    routes.sort();
    let mut h = Sha256::new();
    h.update(format!("{:?}", decision.ports));
    for r in &routes {
        h.update(b"|");
        h.update(r.as_bytes());
    }
    let digest = h.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSplit {
    pub fo_cost: f64,
    pub fleet_cost: f64,
    pub travel_cost: f64,
    pub charging_cost: f64,
    pub capex: f64,
    pub revenue: f64,
    pub energy_sold: f64,
    pub stations_built: usize,
}

impl CostSplit {
    pub fn new(instance: &Instance, decision: &LeaderDecision, plan: &FleetPlan) -> Self {
        CostSplit {
            fo_cost: fo_cost(plan),
            fleet_cost: plan.routes.iter().map(|r| r.vehicle_cost).sum(),
            travel_cost: plan.routes.iter().map(|r| r.travel_cost).sum(),
            charging_cost: plan.routes.iter().map(|r| r.charging_cost).sum(),
            capex: decision.capex(instance),
            revenue: plan.revenue(),
            energy_sold: plan.energy_sold(),
            stations_built: decision.stations_built(),
        }
    }

    pub fn csp_cost(&self) -> f64 {
        self.capex - self.revenue
    }
}

fn write_csv<T: Serialize>(dir: &Path, file: &str, rows: &[T]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(file);
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn fmt(x: f64) -> String {
    let v = if x.abs() < 5e-7 { 0.0 } else { x };
    format!("{v:.6}")
}

fn per_station<T: std::fmt::Display>(
    instance: &Instance,
    values: impl Iterator<Item = T>,
) -> String {
    instance
        .stations()
        .iter()
        .zip(values)
        .map(|(s, v)| format!("{}={v}", s.id))
        .collect::<Vec<_>>()
        .join(";")
}

fn fleet_label(instance: &Instance, plan: &FleetPlan) -> String {
    instance
        .vehicle_types()
        .iter()
        .zip(plan.fleet(instance))
        .map(|(v, n)| format!("T{}={n}", v.id))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    instance: String,
    service_fee: String,
    lb: String,
    ub: String,
    leader_cost: String,
    follower_cost: String,
    capex: String,
    revenue: String,
    csp_profit: String,
    stations_built: usize,
    ports: String,
    upgrade_kw: String,
    fleet: String,
    energy_sold: String,
    iterations: usize,
    exact: bool,
}

#[derive(Debug, Serialize)]
struct VisitRow {
    route: usize,
    vehicle_type: u32,
    stop: usize,
    node: String,
    kind: &'static str,
    arrival: u32,
    start: u32,
    departure: u32,
    load_after: String,
    battery_after: String,
}

#[derive(Debug, Serialize)]
struct IterationRow {
    iter: usize,
    lb: String,
    ub: String,
    gap: String,
    n_scenarios: usize,
    sp2_feasible: bool,
}

#[derive(Debug, Serialize)]
struct ColgenRow<'a> {
    stage: &'a str,
    iter: usize,
    lp_obj: String,
    best_phi_per_type: String,
    pool_size: usize,
    box_width: String,
}

fn visit_rows(graph: &PtenGraph, plan: &FleetPlan) -> Vec<VisitRow> {
    let inst = graph.instance();
    let mut rows = Vec::new();
    for (k, r) in plan.routes.iter().enumerate() {
        for (stop, v) in r.visits.iter().enumerate() {
            let kind = match graph.kind(v.node) {
                NodeKind::Depot => "depot",
                NodeKind::DepotSink => "depot_return",
                NodeKind::Customer(_) => "customer",
                NodeKind::StationCandidate(_) => "station",
                NodeKind::StationDummy { .. } => "charge",
            };
            rows.push(VisitRow {
                route: k,
                vehicle_type: inst.vehicle_types()[r.vehicle].id,
                stop,
                node: graph.node_name(v.node),
                kind,
                arrival: v.arrival,
                start: v.start,
                departure: v.departure,
                load_after: fmt(v.load_after),
                battery_after: fmt(v.energy_after),
            });
        }
    }
    rows
}

fn iteration_rows(iterations: &[CcgIteration]) -> Vec<IterationRow> {
    iterations
        .iter()
        .map(|it| IterationRow {
            iter: it.iter,
            lb: fmt(it.lower_bound),
            ub: fmt(it.upper_bound),
            gap: fmt(it.gap),
            n_scenarios: it.n_scenarios,
            sp2_feasible: it.sp2_feasible,
        })
        .collect()
}

fn colgen_rows(logs: &[(String, Vec<IterationLog>)]) -> Vec<ColgenRow<'_>> {
    let mut rows = Vec::new();
    for (stage, log) in logs {
        for l in log {
            rows.push(ColgenRow {
                stage,
                iter: l.iter,
                lp_obj: fmt(l.lp_obj),
                best_phi_per_type: l
                    .best_phi
                    .iter()
                    .map(|p| if p.is_finite() { fmt(*p) } else { "inf".into() })
                    .collect::<Vec<_>>()
                    .join(";"),
                pool_size: l.pool_size,
                box_width: fmt(l.box_width),
            });
        }
    }
    rows
}

/// Runs the bilevel solver on one instance and writes `solution.csv`,
/// `summary.csv`, `iterations.csv` and `colgen.csv`.
pub fn run_solve(spec: &ExperimentSpec) -> Result<BilevelSolution, CliError> {
    spec.validate()?;
    let inst = spec.load()?;
    let graph = expand(&inst)?;
    let sol = run_ccg(&graph, &spec.ccg_options())?;
    let split = CostSplit::new(&inst, &sol.decision, &sol.plan);
    let summary = SummaryRow {
        instance: inst.name().to_string(),
        service_fee: per_station(&inst, inst.economics().service_fee.iter()),
        lb: fmt(sol.lower_bound),
        ub: fmt(sol.leader_cost),
        leader_cost: fmt(sol.leader_cost),
        follower_cost: fmt(sol.follower_cost),
        capex: fmt(split.capex),
        revenue: fmt(split.revenue),
        csp_profit: fmt(-sol.leader_cost),
        stations_built: split.stations_built,
        ports: per_station(&inst, sol.decision.ports.iter()),
        upgrade_kw: per_station(&inst, sol.decision.upgrade.iter().map(|u| fmt(*u))),
        fleet: fleet_label(&inst, &sol.plan),
        energy_sold: fmt(split.energy_sold),
        iterations: sol.iterations.len(),
        exact: sol.exact,
    };
    write_csv(&spec.out_dir, "summary.csv", &[summary])?;
    write_csv(
        &spec.out_dir,
        "solution.csv",
        &visit_rows(&graph, &sol.plan),
    )?;
    write_csv(
        &spec.out_dir,
        "iterations.csv",
        &iteration_rows(&sol.iterations),
    )?;
    write_csv(&spec.out_dir, "colgen.csv", &colgen_rows(&sol.colgen_logs))?;
    Ok(sol)
}

/// One evaluated point of a fee sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub fee: f64,
    /// Bilevel (two-entity) outcome.
    pub bilevel: Result<(CostSplit, String), String>,
    /// Single-entity comparator, costs split after solving.
    pub joint: Result<(CostSplit, String), String>,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    fee: String,
    fo_cost: String,
    csp_cost: String,
    csp_profit: String,
    total: String,
    stations_built: String,
    total_energy_sold: String,
    fleet_cost: String,
    travel_cost: String,
    charging_cost: String,
    capex: String,
    revenue: String,
    strategy: String,
    joint_fo_cost: String,
    joint_csp_cost: String,
    joint_total: String,
    joint_stations_built: String,
    joint_energy_sold: String,
    joint_strategy: String,
    errors: String,
}

/// Two-entity solve at one instance setting.
pub fn bilevel_point(
    instance: &Instance,
    opts: &CcgOptions,
) -> Result<(CostSplit, String, BilevelSolution), CliError> {
    let graph = expand(instance)?;
    let sol = run_ccg(&graph, opts)?;
    let split = CostSplit::new(instance, &sol.decision, &sol.plan);
    let sig = strategy_signature(&graph, &sol.decision, &sol.plan);
    Ok((split, sig, sol))
}

/// Single-entity solve minimizing the sum of both objectives.
pub fn joint_point(
    instance: &Instance,
    opts: &CcgOptions,
) -> Result<(CostSplit, String), CliError> {
    let graph = expand(instance)?;
    let mut pool = ColumnPool::new();
    let (int, _) = solve_master(&graph, &MasterSpec::joint(), &mut pool, &opts.colgen)
        .map_err(CcgError::from)?;
    let split = CostSplit::new(instance, &int.decision, &int.plan);
    let sig = strategy_signature(&graph, &int.decision, &int.plan);
    Ok((split, sig))
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Bilevel and single-entity solutions for every fee, in grid order.
pub fn fee_sweep(base: &Instance, fees: &[f64], opts: &CcgOptions, jobs: usize) -> Vec<SweepPoint> {
    with_pool(jobs, || {
        fees.par_iter()
            .map(|&fee| {
                let inst = base.with_overrides(&InstancePatch::fee(fee));
                let bilevel = inst
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|i| bilevel_point(i, opts).map_err(|e| e.to_string()))
                    .map(|(split, sig, _)| (split, sig));
                let joint = inst
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|i| joint_point(i, opts).map_err(|e| e.to_string()));
                SweepPoint {
                    fee,
                    bilevel,
                    joint,
                }
            })
            .collect()
    })
}

fn sweep_row(p: &SweepPoint) -> SweepRow {
    let mut errors = Vec::new();
    let cols =
        |r: &Result<(CostSplit, String), String>, tag: &str, errors: &mut Vec<String>| match r {
            Ok((s, sig)) => Some((s.clone(), sig.clone())),
            Err(e) => {
                errors.push(format!("{tag}: {e}"));
                None
            }
        };
    let b = cols(&p.bilevel, "bilevel", &mut errors);
    let j = cols(&p.joint, "joint", &mut errors);
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    SweepRow {
        fee: fmt(p.fee),
        fo_cost: opt(b.as_ref().map(|(s, _)| s.fo_cost)),
        csp_cost: opt(b.as_ref().map(|(s, _)| s.csp_cost())),
        csp_profit: opt(b.as_ref().map(|(s, _)| -s.csp_cost())),
        total: opt(b.as_ref().map(|(s, _)| s.fo_cost + s.csp_cost())),
        stations_built: b
            .as_ref()
            .map(|(s, _)| s.stations_built.to_string())
            .unwrap_or_default(),
        total_energy_sold: opt(b.as_ref().map(|(s, _)| s.energy_sold)),
        fleet_cost: opt(b.as_ref().map(|(s, _)| s.fleet_cost)),
        travel_cost: opt(b.as_ref().map(|(s, _)| s.travel_cost)),
        charging_cost: opt(b.as_ref().map(|(s, _)| s.charging_cost)),
        capex: opt(b.as_ref().map(|(s, _)| s.capex)),
        revenue: opt(b.as_ref().map(|(s, _)| s.revenue)),
        strategy: b.as_ref().map(|(_, g)| g.clone()).unwrap_or_default(),
        joint_fo_cost: opt(j.as_ref().map(|(s, _)| s.fo_cost)),
        joint_csp_cost: opt(j.as_ref().map(|(s, _)| s.csp_cost())),
        joint_total: opt(j.as_ref().map(|(s, _)| s.fo_cost + s.csp_cost())),
        joint_stations_built: j
            .as_ref()
            .map(|(s, _)| s.stations_built.to_string())
            .unwrap_or_default(),
        joint_energy_sold: opt(j.as_ref().map(|(s, _)| s.energy_sold)),
        joint_strategy: j.as_ref().map(|(_, g)| g.clone()).unwrap_or_default(),
        errors: errors.join(" | "),
    }
}

/// Fee sweep writing `sweep.csv`.
pub fn run_fee_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>, CliError> {
    spec.validate()?;
    let base = resolve_instance(&spec.instance)?;
    let points = fee_sweep(&base, &spec.fees, &spec.ccg_options(), spec.jobs);
    let rows: Vec<SweepRow> = points.iter().map(sweep_row).collect();
    write_csv(&spec.out_dir, "sweep.csv", &rows)?;
    Ok(points)
}

/// One charger rating in a rate study.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub rate: f64,
    pub port_cost: f64,
    pub result: Result<(CostSplit, String), String>,
}

#[derive(Debug, Serialize)]
struct RateRow {
    rate_kw: String,
    port_cost: String,
    fo_cost: String,
    fleet_cost: String,
    travel_cost: String,
    charging_cost: String,
    csp_capex: String,
    csp_revenue: String,
    csp_cost: String,
    csp_profit: String,
    stations_built: String,
    energy_sold: String,
    strategy: String,
    errors: String,
}

/// Bilevel solutions with the charger rating of `station` replaced.
pub fn rate_study(
    base: &Instance,
    station: &str,
    rates: &[f64],
    port_costs: &[f64],
    opts: &CcgOptions,
    jobs: usize,
) -> Result<Vec<RatePoint>, CliError> {
    let s = base
        .station_index(station)
        .ok_or_else(|| CliError::Usage(format!("unknown station {station}")))?;
    let default_cost = base.stations()[s].port_cost;
    Ok(with_pool(jobs, || {
        rates
            .par_iter()
            .enumerate()
            .map(|(k, &rate)| {
                let port_cost = port_costs.get(k).copied().unwrap_or(default_cost);
                let patch = InstancePatch {
                    rated_power: BTreeMap::from([(station.to_string(), rate)]),
                    port_cost: BTreeMap::from([(station.to_string(), port_cost)]),
                    ..Default::default()
                };
                let result = base
                    .with_overrides(&patch)
                    .map_err(|e| e.to_string())
                    .and_then(|i| bilevel_point(&i, opts).map_err(|e| e.to_string()))
                    .map(|(split, sig, _)| (split, sig));
                RatePoint {
                    rate,
                    port_cost,
                    result,
                }
            })
            .collect()
    }))
}

/// Rate study writing `rates.csv`.
pub fn run_rate_study(spec: &ExperimentSpec) -> Result<Vec<RatePoint>, CliError> {
    spec.validate()?;
    let base = spec.load()?;
    let points = rate_study(
        &base,
        &spec.rate_station,
        &spec.rates,
        &spec.rate_port_costs,
        &spec.ccg_options(),
        spec.jobs,
    )?;
    let rows: Vec<RateRow> = points
        .iter()
        .map(|p| {
            let ok = p.result.as_ref().ok();
            let opt =
                |f: &dyn Fn(&CostSplit) -> f64| ok.map(|(s, _)| fmt(f(s))).unwrap_or_default();
            RateRow {
                rate_kw: fmt(p.rate),
                port_cost: fmt(p.port_cost),
                fo_cost: opt(&|s| s.fo_cost),
                fleet_cost: opt(&|s| s.fleet_cost),
                travel_cost: opt(&|s| s.travel_cost),
                charging_cost: opt(&|s| s.charging_cost),
                csp_capex: opt(&|s| s.capex),
                csp_revenue: opt(&|s| s.revenue),
                csp_cost: opt(&|s| s.csp_cost()),
                csp_profit: opt(&|s| -s.csp_cost()),
                stations_built: ok
                    .map(|(s, _)| s.stations_built.to_string())
                    .unwrap_or_default(),
                energy_sold: opt(&|s| s.energy_sold),
                strategy: ok.map(|(_, g)| g.clone()).unwrap_or_default(),
                errors: p.result.as_ref().err().cloned().unwrap_or_default(),
            }
        })
        .collect();
    write_csv(&spec.out_dir, "rates.csv", &rows)?;
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub solver_leader_cost: f64,
    pub oracle_leader_cost: f64,
    pub solver_follower_cost: f64,
    pub oracle_follower_cost: f64,
    pub grid_points: usize,
}

impl OracleComparison {
    pub fn agrees(&self, tol: f64) -> bool {
        (self.solver_leader_cost - self.oracle_leader_cost).abs() <= tol
    }
}

#[derive(Debug, Serialize)]
struct OracleRow {
    instance: String,
    solver_leader_cost: String,
    oracle_leader_cost: String,
    solver_follower_cost: String,
    oracle_follower_cost: String,
    grid_points: usize,
    agree: bool,
}

/// Compares the bilevel solver with exhaustive enumeration and writes
/// `oracle.csv`; disagreement beyond `1e-6` is an error.
pub fn run_oracle_check(spec: &ExperimentSpec) -> Result<OracleComparison, CliError> {
    spec.validate()?;
    let inst = spec.load()?;
    let graph = expand(&inst)?;
    let oracle = bilevel_exhaustive(&graph, &EnumerationBudget::default())?;
    let sol = run_ccg(&graph, &spec.ccg_options())?;
    let cmp = OracleComparison {
        solver_leader_cost: sol.leader_cost,
        oracle_leader_cost: oracle.best.leader_cost,
        solver_follower_cost: sol.follower_cost,
        oracle_follower_cost: oracle.best.follower_cost,
        grid_points: oracle.grid.len(),
    };
    let row = OracleRow {
        instance: inst.name().to_string(),
        solver_leader_cost: fmt(cmp.solver_leader_cost),
        oracle_leader_cost: fmt(cmp.oracle_leader_cost),
        solver_follower_cost: fmt(cmp.solver_follower_cost),
        oracle_follower_cost: fmt(cmp.oracle_follower_cost),
        grid_points: cmp.grid_points,
        agree: cmp.agrees(1e-6),
    };
    write_csv(&spec.out_dir, "oracle.csv", &[row])?;
    if !cmp.agrees(1e-6) {
        return Err(CliError::Mismatch(format!(
            "leader cost {} vs {}",
            cmp.solver_leader_cost, cmp.oracle_leader_cost
        )));
    }
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fee_grids() {
        assert_eq!(default_fee_grid().len(), 11);
        assert_eq!(parse_fee_grid("0:0.5:0.05").unwrap(), default_fee_grid());
        assert_eq!(parse_fee_grid("0.3, 0.1,0.1").unwrap(), vec![0.1, 0.3]);
        assert_eq!(
            parse_fee_grid("0:0.1:0.05,0.1684").unwrap(),
            vec![0.0, 0.05, 0.1, 0.1684]
        );
        assert!(parse_fee_grid("0:x").is_err());
        assert!(parse_fee_grid("").is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = ExperimentSpec::new("toy", Mode::FeeSweep);
        assert!(s.validate().is_ok());
        s.fees = vec![11.0];
        assert_eq!(s.validate().unwrap_err().exit_code(), 2);
        s.fees = vec![0.1];
        s.rate_port_costs = vec![1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn missing_instance_is_a_usage_error() {
        let err = resolve_instance("/no/such/instance.json").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(resolve_instance("toy").is_ok());
    }
}
