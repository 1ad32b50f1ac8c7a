//! Re-checks solver output against the flow formulation's constraints,
//! using only the raw variable values.

mod common;

use std::collections::BTreeMap;

use common::random_instance::{random_instance, Shape};
use elrp::ccg::{follower_response, run_ccg, CcgOptions};
use elrp::colgen::ColgenOptions;
use elrp::evaluate::{
    check_joint_feasibility, encode_plan, FleetPlan, LeaderDecision, RawEncoding,
};
use elrp::instance::{bundled, InstancePatch, NodeKind};
use elrp::oracle::leader_grid;
use elrp::pten::{expand, PtenGraph, DEPOT, SINK};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn check_raw(graph: &PtenGraph, decision: &LeaderDecision, enc: &RawEncoding) {
    let inst = graph.instance();
    let vehicles = enc.vehicle_type.len();
    let mut served = vec![0; inst.num_customers()];
    let mut dummy_use: BTreeMap<_, usize> = BTreeMap::new();
    let mut station_use: BTreeMap<(usize, u32), usize> = BTreeMap::new();

    for k in 0..vehicles {
        let vt = &inst.vehicle_types()[enc.vehicle_type[k]];
        let arcs: Vec<_> = enc
            .x
            .iter()
            .filter(|(v, _, _)| *v == k)
            .map(|(_, a, b)| (*a, *b))
            .collect();
        assert_eq!(
            arcs.iter().filter(|(a, _)| *a == DEPOT).count(),
            1,
            "vehicle {k} leaves the depot once"
        );
        assert_eq!(
            arcs.iter().filter(|(_, b)| *b == SINK).count(),
            1,
            "vehicle {k} returns once"
        );
        let mut balance: BTreeMap<_, i32> = BTreeMap::new();
        for &(a, b) in &arcs {
            *balance.entry(a).or_default() -= 1;
            *balance.entry(b).or_default() += 1;
        }
        for (n, bal) in balance {
            let want = if n == DEPOT {
                -1
            } else if n == SINK {
                1
            } else {
                0
            };
            assert_eq!(bal, want, "flow conservation at {}", graph.node_name(n));
        }
        assert!(enc.q[&(k, DEPOT)] <= vt.freight_capacity + TOL);
        assert!((enc.b[&(k, DEPOT)] - vt.battery_capacity).abs() <= TOL);

        for &(a, b) in &arcs {
            let arc = graph.arc(graph.find_arc(a, b).expect("arc exists in the network"));
            let (ta, tb) = (enc.tau[&(k, a)], enc.tau[&(k, b)]);
            let (ba, bb) = (enc.b[&(k, a)], enc.b[&(k, b)]);
            let (qa, qb) = (enc.q[&(k, a)], enc.q[&(k, b)]);
            match (graph.kind(a), graph.kind(b)) {
                (NodeKind::StationDummy { station, time, .. }, NodeKind::StationDummy { .. }) => {
                    assert_eq!(tb, ta + 1);
                    let gained = inst.slot_energy(station);
                    assert!((bb - ba - gained).abs() <= 1e-6, "charge of one slot");
                    assert!(bb <= vt.battery_capacity + 1e-6, "no overcharge");
                    assert!(decision.build[station]);
                    *station_use.entry((station, time)).or_default() += 1;
                    *dummy_use.entry(a).or_default() += 1;
                    assert!((qa - qb).abs() <= TOL);
                }
                (from, to) => {
                    let service = match from {
                        NodeKind::Customer(c) => inst.customers()[c].service_time,
                        _ => 0,
                    };
                    assert!(
                        tb >= ta + service + arc.travel_time,
                        "time propagates along {a:?}->{b:?}"
                    );
                    assert!(
                        (ba - vt.consumption_rate * arc.distance - bb).abs() <= 1e-6,
                        "energy use"
                    );
                    assert!(bb >= -TOL, "battery stays non-negative");
                    let demand = match to {
                        NodeKind::Customer(c) => inst.customers()[c].demand,
                        _ => 0.0,
                    };
                    assert!((qa - demand - qb).abs() <= 1e-6, "load drops by the demand");
                    if let NodeKind::StationDummy { time, .. } = to {
                        assert_eq!(tb, time, "dummies are entered at their slot");
                    }
                }
            }
        }
        for (&(_, n), &t) in enc.tau.iter().filter(|((v, _), _)| *v == k) {
            if let NodeKind::Customer(c) = graph.kind(n) {
                let cu = &inst.customers()[c];
                assert!(
                    t >= cu.window_early && t + cu.service_time <= cu.window_late,
                    "window of {}",
                    cu.id
                );
                served[c] += 1;
            }
            assert!(t <= inst.horizon());
        }
    }
    assert!(
        served.iter().all(|&n| n == 1),
        "each customer served exactly once: {served:?}"
    );
    assert!(
        dummy_use.values().all(|&n| n <= 1),
        "a port slot holds one truck"
    );
    for ((s, _), n) in station_use {
        assert!(
            n <= decision.ports[s] as usize,
            "port capacity at station {s}"
        );
    }
}

fn check_plan(graph: &PtenGraph, decision: &LeaderDecision, plan: &FleetPlan) {
    check_joint_feasibility(graph.instance(), decision, plan).unwrap();
    check_raw(graph, decision, &encode_plan(plan));
}

#[test]
fn bilevel_solutions_satisfy_the_flow_model() {
    for name in ["toy", "small_base", "small_tw"] {
        for fee in [0.0, 0.125, 0.25] {
            let inst = bundled(name)
                .unwrap()
                .with_overrides(&InstancePatch::fee(fee))
                .unwrap();
            let graph = expand(&inst).unwrap();
            let sol = run_ccg(&graph, &CcgOptions::default()).unwrap();
            check_plan(&graph, &sol.decision, &sol.plan);
        }
    }
}

#[test]
fn follower_responses_satisfy_the_flow_model() {
    let graph = expand(&bundled("small_base").unwrap()).unwrap();
    for d in leader_grid(graph.instance()) {
        let resp = follower_response(&graph, &d, &ColgenOptions::default()).unwrap();
        check_plan(&graph, &d, &resp.cheapest);
        if let Some(p) = &resp.optimistic {
            check_plan(&graph, &d, p);
        }
    }
}

#[test]
fn random_follower_responses_satisfy_the_flow_model() {
    let mut checked = 0;
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, Shape::default());
        let graph = expand(&inst).unwrap();
        let ports: Vec<u32> = inst.stations().iter().map(|s| s.size_max).collect();
        let d = LeaderDecision::from_ports(&inst, &ports);
        match follower_response(&graph, &d, &ColgenOptions::default()) {
            Ok(resp) => {
                check_plan(&graph, &d, &resp.cheapest);
                checked += 1;
            }
            Err(elrp::colgen::ColgenError::Infeasible) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(checked >= 10, "only {checked} feasible instances");
}
