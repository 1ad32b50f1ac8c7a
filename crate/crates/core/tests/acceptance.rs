//! Acceptance run: one pass/fail line per criterion.
//!
//! `cargo test --release --test acceptance`

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::lp_gen::{dual_objective, enumerate_ip, random_lp, random_small_ip};
use common::network::expected_counts;
use common::random_instance::{random_duals, random_instance, Shape};
use elrp::ccg::{run_ccg, solve_sp1, CcgOptions};
use elrp::cli::{run_fee_sweep, run_rate_study, ExperimentSpec, Mode, RatePoint, SweepPoint};
use elrp::colgen::{ColgenOptions, ColumnPool};
use elrp::evaluate::LeaderDecision;
use elrp::instance::{bundled, Instance, InstancePatch};
use elrp::mathprog::{solve_lp, solve_milp, LpStatus, DEFAULT_MILP_GAP};
use elrp::oracle::{
    best_fleet_plan, bilevel_exhaustive, enumerate_all, enumerate_routes, EnumerationBudget,
};
use elrp::pten::{expand, ArcKind, PtenGraph};
use elrp::spprc::{solve_pricing, Dominance, PricingContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const PRICING_SEEDS: u64 = 100;

fn pricing_context(graph: &PtenGraph, rng: &mut ChaCha8Rng) -> PricingContext {
    let (cover, usage) = random_duals(rng, graph.instance(), 4000.0);
    let mut ctx = PricingContext::new(
        graph,
        rng.gen_range(0..graph.instance().vehicle_types().len()),
    );
    ctx.cover_dual = cover;
    ctx.usage_dual = usage;
    ctx.revenue_weight = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    ctx.threshold = f64::INFINITY;
    ctx
}

fn pricing_case(seed: u64) -> (PtenGraph, PricingContext) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = expand(&random_instance(&mut rng, Shape::default())).unwrap();
    let ctx = pricing_context(&graph, &mut rng);
    (graph, ctx)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut routes = 0;
    for seed in 0..PRICING_SEEDS {
        let (graph, ctx) = pricing_case(seed);
        let got = solve_pricing(&graph, &ctx).best_reduced_cost;
        let all = enumerate_routes(&graph, ctx.vehicle, &EnumerationBudget::default())
            .map_err(|e| e.to_string())?;
        routes += all.len();
        let want = all
            .iter()
            .map(|r| ctx.reduced_cost(r))
            .fold(f64::INFINITY, f64::min);
        if got != want {
            let diff = (got - want).abs();
            ensure!(
                diff <= 1e-9,
                "seed {seed}: labeling {got} vs enumeration {want}"
            );
            worst = worst.max(diff);
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{PRICING_SEEDS} instances, {routes} enumerated routes, max |diff| {worst:.1e}, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let (mut on_labels, mut off_labels) = (0, 0);
    for seed in 0..PRICING_SEEDS {
        let (graph, mut ctx) = pricing_case(seed);
        ctx.dominance = Dominance::Exact;
        let on = solve_pricing(&graph, &ctx);
        ctx.dominance = Dominance::Off;
        let off = solve_pricing(&graph, &ctx);
        ensure!(
            on.best_reduced_cost == off.best_reduced_cost,
            "seed {seed}: {} with dominance, {} without",
            on.best_reduced_cost,
            off.best_reduced_cost
        );
        on_labels += on.stats.labels_created;
        off_labels += off.stats.labels_created;
    }
    Ok(format!("{PRICING_SEEDS} seeds identical; labels {on_labels} with dominance vs {off_labels} without"))
}

/// Nothing, each station alone, all stations, all stations at maximum size.
fn spanning_decisions(inst: &Instance) -> Vec<(String, LeaderDecision)> {
    let n = inst.num_stations();
    let ids: Vec<&str> = inst.stations().iter().map(|s| s.id.as_str()).collect();
    let mut out = vec![("nothing".to_string(), vec![0; n])];
    for s in 0..n {
        let mut p = vec![0; n];
        p[s] = inst.stations()[s].size_min.max(1);
        out.push((format!("{} only", ids[s]), p));
    }
    out.push((
        "all".into(),
        inst.stations().iter().map(|s| s.size_min.max(1)).collect(),
    ));
    out.push((
        "all at size_max".into(),
        inst.stations().iter().map(|s| s.size_max).collect(),
    ));
    let mut seen = Vec::new();
    out.into_iter()
        .filter(|(_, p)| {
            let fresh = !seen.contains(p);
            seen.push(p.clone());
            fresh
        })
        .map(|(name, p)| (name, LeaderDecision::from_ports(inst, &p)))
        .collect()
}

fn criterion_3() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for name in ["toy", "small_base"] {
        let inst = bundled(name).map_err(|e| e.to_string())?;
        let graph = expand(&inst).map_err(|e| e.to_string())?;
        let routes =
            enumerate_all(&graph, &EnumerationBudget::default()).map_err(|e| e.to_string())?;
        for (label, d) in spanning_decisions(&inst) {
            let (_, want) = best_fleet_plan(&graph, &routes, &d).map_err(|e| e.to_string())?;
            let (sp1, _) = solve_sp1(
                &graph,
                &d,
                &mut ColumnPool::new(),
                &ColgenOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            let diff = (sp1.objective - want).abs();
            ensure!(diff <= 1e-6, "{name} {label}: {} vs {want}", sp1.objective);
            worst = worst.max(diff);
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} leader decisions on toy and small_base, max |diff| {worst:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let opts = CcgOptions::default();
    let mut parts = Vec::new();
    for name in ["toy", "small_base"] {
        for fee in [0.0, 0.125, 0.30] {
            let inst = bundled(name)
                .and_then(|i| i.with_overrides(&InstancePatch::fee(fee)))
                .map_err(|e| e.to_string())?;
            let graph = expand(&inst).map_err(|e| e.to_string())?;
            let want = bilevel_exhaustive(&graph, &EnumerationBudget::default())
                .map_err(|e| e.to_string())?;
            let got = run_ccg(&graph, &opts).map_err(|e| format!("{name} fee {fee}: {e}"))?;
            let diff = (got.leader_cost - want.best.leader_cost).abs();
            ensure!(
                diff <= 1e-6,
                "{name} fee {fee}: {} vs {}",
                got.leader_cost,
                want.best.leader_cost
            );
            let gap = got.leader_cost - got.lower_bound;
            ensure!(
                gap <= opts.epsilon * got.leader_cost.abs().max(1.0),
                "{name} fee {fee}: gap {gap}"
            );
            ensure!(
                got.iterations.len() <= 20,
                "{name} fee {fee}: {} iterations",
                got.iterations.len()
            );
            parts.push(format!("{name}@{fee}:{}it", got.iterations.len()));
        }
    }
    Ok(parts.join(" "))
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let rows = rng.gen_range(3..=25);
        let cols = rng.gen_range(3..=40);
        let model = random_lp(&mut rng, rows, cols, false);
        let sol = solve_lp(&model).map_err(|e| format!("lp {seed}: {e}"))?;
        ensure!(
            sol.status == LpStatus::Optimal,
            "lp {seed}: {:?}",
            sol.status
        );
        let dual = dual_objective(&model, &sol).ok_or(format!("lp {seed}: duals infeasible"))?;
        let diff = (dual - sol.objective).abs();
        ensure!(
            diff <= 1e-7,
            "lp {seed}: primal {} dual {dual}",
            sol.objective
        );
        worst = worst.max(diff);
    }
    let mut feasible = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        let cols = rng.gen_range(2..=12);
        let rows = rng.gen_range(1..=6);
        let model = random_small_ip(&mut rng, rows, cols);
        let sol = solve_milp(&model, DEFAULT_MILP_GAP).map_err(|e| format!("ip {seed}: {e}"))?;
        match enumerate_ip(&model) {
            Some(best) => {
                ensure!(
                    sol.status == LpStatus::Optimal,
                    "ip {seed}: {:?}",
                    sol.status
                );
                ensure!(
                    (sol.objective - best).abs() <= 1e-6,
                    "ip {seed}: {} vs {best}",
                    sol.objective
                );
                feasible += 1;
            }
            None => ensure!(
                sol.status == LpStatus::Infeasible,
                "ip {seed}: {:?}",
                sol.status
            ),
        }
    }
    Ok(format!(
        "500 LPs, max |primal - dual| {worst:.1e}; 100 IPs ({feasible} feasible) match enumeration"
    ))
}

fn check_network(graph: &PtenGraph) -> Result<(), String> {
    let (nodes, internal, external) = expected_counts(graph);
    let internal_found = graph
        .arcs()
        .filter(|(_, a)| a.kind == ArcKind::Internal)
        .count();
    let external_found = graph.num_arcs() - internal_found;
    ensure!(
        graph.num_nodes() == nodes,
        "nodes {} vs {nodes}",
        graph.num_nodes()
    );
    ensure!(
        internal_found == internal,
        "internal arcs {internal_found} vs {internal}"
    );
    ensure!(
        external_found == external,
        "external arcs {external_found} vs {external}"
    );
    Ok(())
}

fn criterion_6() -> Outcome {
    let base = bundled("small_base").map_err(|e| e.to_string())?;
    let horizon = base.horizon();
    let mut graphs = 0;
    for slots_a in 1..=horizon {
        for slots_b in [1, horizon / 2, horizon] {
            for smax_a in 1..=3 {
                for smax_b in 1..=3 {
                    let mut file = base.file().clone();
                    file.stations[0].feasible_slots = Some(slots_a);
                    file.stations[0].size_max = smax_a;
                    file.stations[0].size_min = 1;
                    file.stations[1].feasible_slots = Some(slots_b);
                    file.stations[1].size_max = smax_b;
                    file.stations[1].size_min = 1;
                    let inst = Instance::from_file(file).map_err(|e| e.to_string())?;
                    let g = expand(&inst).map_err(|e| e.to_string())?;
                    check_network(&g).map_err(|e| {
                        format!("slots ({slots_a},{slots_b}) sizes ({smax_a},{smax_b}): {e}")
                    })?;
                    graphs += 1;
                }
            }
        }
    }
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = expand(&random_instance(&mut rng, Shape::default())).unwrap();
        check_network(&g).map_err(|e| format!("random seed {seed}: {e}"))?;
        graphs += 1;
    }
    Ok(format!(
        "{graphs} networks satisfy the node and arc count identities"
    ))
}

struct CaseStudy {
    base: Vec<SweepPoint>,
    tw: Vec<SweepPoint>,
    rates: Vec<RatePoint>,
    elapsed_base: Duration,
}

fn run_case_study(out: &Path) -> Result<CaseStudy, String> {
    let sweep = |name: &str, dir: &str| -> Result<(Vec<SweepPoint>, Duration), String> {
        let mut spec = ExperimentSpec::new(name, Mode::FeeSweep);
        spec.out_dir = out.join(dir);
        let start = Instant::now();
        let points = run_fee_sweep(&spec).map_err(|e| e.to_string())?;
        Ok((points, start.elapsed()))
    };
    let (base, elapsed_base) = sweep("small_base", "base")?;
    let (tw, _) = sweep("small_tw", "tw")?;
    let mut spec = ExperimentSpec::new("small_tw", Mode::RateStudy);
    spec.fee = Some(0.25);
    spec.rates = vec![10.0, 15.0, 20.0];
    spec.rate_port_costs = vec![10_500.0, 12_000.0, 12_500.0];
    spec.out_dir = out.join("rates");
    let rates = run_rate_study(&spec).map_err(|e| e.to_string())?;
    Ok(CaseStudy {
        base,
        tw,
        rates,
        elapsed_base,
    })
}

struct Row {
    fee: f64,
    fo: f64,
    fleet: f64,
    profit: f64,
    energy: f64,
    built: usize,
}

fn rows(points: &[SweepPoint]) -> Result<Vec<Row>, String> {
    points
        .iter()
        .map(|p| {
            let (s, _) = p
                .bilevel
                .as_ref()
                .map_err(|e| format!("fee {}: {e}", p.fee))?;
            Ok(Row {
                fee: p.fee,
                fo: s.fo_cost,
                fleet: s.fleet_cost,
                profit: -s.csp_cost(),
                energy: s.energy_sold,
                built: s.stations_built,
            })
        })
        .collect()
}

/// Largest fee up to which the provider builds nothing.
fn f_low(rows: &[Row]) -> Option<f64> {
    let k = rows.iter().take_while(|r| r.built == 0).count();
    (k > 0 && k < rows.len()).then(|| rows[k - 1].fee)
}

/// First fee from which no energy is sold, preceded by a fee with sales.
fn f_high(rows: &[Row]) -> Option<usize> {
    let k = rows.iter().rposition(|r| r.energy > 1e-9)? + 1;
    (k < rows.len()).then_some(k)
}

fn best_fee(rows: &[Row]) -> &Row {
    rows.iter().fold(&rows[0], |best, r| {
        if r.profit > best.profit + 1e-9 {
            r
        } else {
            best
        }
    })
}

fn criterion_7(study: &CaseStudy) -> Outcome {
    let base = rows(&study.base)?;
    let tw = rows(&study.tw)?;
    let low = f_low(&base).ok_or("no non-participation interval on small_base")?;
    ensure!(low > 0.0, "small_base: provider participates at fee 0");
    let hb = f_high(&base).ok_or("no rejection threshold on small_base")?;
    ensure!(
        base[hb..].iter().all(|r| r.energy <= 1e-9),
        "small_base: sales above the threshold"
    );
    ensure!(
        base[hb].fleet > base[hb - 1].fleet,
        "small_base: fleet cost {} at fee {} does not exceed {} at {}",
        base[hb].fleet,
        base[hb].fee,
        base[hb - 1].fleet,
        base[hb - 1].fee
    );
    let ht = f_high(&tw).ok_or("no rejection threshold on small_tw")?;
    ensure!(
        tw[ht].fee < base[hb].fee,
        "threshold {} on small_tw vs {} on small_base",
        tw[ht].fee,
        base[hb].fee
    );

    let mut rate_rows = Vec::new();
    for p in &study.rates {
        let (s, _) = p
            .result
            .as_ref()
            .map_err(|e| format!("rate {}: {e}", p.rate))?;
        rate_rows.push((p.rate, s.fo_cost, -s.csp_cost()));
    }
    for w in rate_rows.windows(2) {
        ensure!(
            w[1].1 <= w[0].1 + 1e-6,
            "follower cost rises from {} to {} kW",
            w[0].0,
            w[1].0
        );
        ensure!(
            w[1].2 >= w[0].2 - 1e-6,
            "provider profit falls from {} to {} kW",
            w[0].0,
            w[1].0
        );
    }
    let fo: Vec<String> = rate_rows.iter().map(|r| format!("{:.0}", r.1)).collect();
    let profit: Vec<String> = rate_rows.iter().map(|r| format!("{:.0}", r.2)).collect();
    Ok(format!(
        "f_low {low:.2}; rejection from {:.2} (base) vs {:.2} (tw); rates 10/15/20 kW: FO {} profit {}",
        base[hb].fee,
        tw[ht].fee,
        fo.join("/"),
        profit.join("/")
    ))
}

fn reference_log(study: &CaseStudy, out: &Path) -> Outcome {
    let base = rows(&study.base)?;
    let tw = rows(&study.tw)?;
    let (b, t) = (best_fee(&base), best_fee(&tw));
    let drop = 1.0 - t.profit / b.profit;
    let rise = t.fo / b.fo - 1.0;
    let hb = f_high(&base).map(|k| base[k].fee).unwrap_or(f64::NAN);
    let ht = f_high(&tw).map(|k| tw[k].fee).unwrap_or(f64::NAN);
    let log = format!(
        "quantity,reference,measured\n\
         chosen_fee_base,0.125,{:.6}\n\
         rejection_fee_base,0.421,{hb:.6}\n\
         rejection_fee_tw,0.25,{ht:.6}\n\
         profit_drop_tw,0.7423,{drop:.6}\n\
         fo_cost_rise_tw,0.138,{rise:.6}\n",
        b.fee
    );
    fs::write(out.join("regression_log.csv"), log).map_err(|e| e.to_string())?;
    ensure!(
        drop > 0.0,
        "provider profit does not drop with time windows ({drop:.3})"
    );
    ensure!(
        rise > 0.0,
        "follower cost does not rise with time windows ({rise:.3})"
    );
    Ok(format!(
        "chosen fee {:.2} (ref 0.125); tw profit drop {:.1}% (ref 74.23%); FO cost rise {:.1}% (ref 13.8%)",
        b.fee,
        drop * 100.0,
        rise * 100.0
    ))
}

fn criterion_8(study: &CaseStudy) -> Outcome {
    let t = study.elapsed_base;
    ensure!(study.base.len() == 11, "{} fee points", study.base.len());
    ensure!(t < Duration::from_secs(300), "sweep took {t:?}");
    Ok(format!(
        "11-point sweep on small_base in {:.2}s",
        t.as_secs_f64()
    ))
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = entry.path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|e| e == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn criterion_9(first: &Path, second: &Path) -> Outcome {
    run_case_study(second)?;
    let a = csv_files(first);
    let b = csv_files(second);
    ensure!(!a.is_empty(), "no CSV output");
    ensure!(a.len() == b.len(), "{} vs {} CSV files", a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        ensure!(
            x.strip_prefix(first).ok() == y.strip_prefix(second).ok(),
            "file sets differ"
        );
        let (bx, by) = (
            fs::read(x).map_err(|e| e.to_string())?,
            fs::read(y).map_err(|e| e.to_string())?,
        );
        ensure!(bx == by, "{} differs between runs", x.display());
    }
    Ok(format!(
        "{} CSV files byte-identical across two runs",
        a.len()
    ))
}

fn run(id: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("criterion {id}: PASS  {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {id}: FAIL  {detail}");
            false
        }
    }
}

fn main() {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = fs::remove_dir_all(&root);
    let (first, second) = (root.join("run1"), root.join("run2"));

    let mut ok = true;
    ok &= run("1", criterion_1);
    ok &= run("2", criterion_2);
    ok &= run("3", criterion_3);
    ok &= run("4", criterion_4);
    ok &= run("5", criterion_5);
    ok &= run("6", criterion_6);
    let study = catch_unwind(|| run_case_study(&first))
        .unwrap_or_else(|_| Err("case study panicked".into()));
    match &study {
        Ok(study) => {
            ok &= run("7", || criterion_7(study));
            ok &= run("7 (reference targets)", || reference_log(study, &root));
            ok &= run("8", || criterion_8(study));
        }
        Err(e) => {
            for id in ["7", "8"] {
                println!("criterion {id}: FAIL  case study did not run: {e}");
            }
            ok = false;
        }
    }
    ok &= run("9", || criterion_9(&first, &second));
    println!("acceptance outputs in {}", root.display());
    if !ok {
        std::process::exit(1);
    }
}
