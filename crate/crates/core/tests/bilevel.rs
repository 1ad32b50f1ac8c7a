mod common;

use common::random_instance::{random_instance, Shape};
use elrp::ccg::{follower_response, run_ccg, solve_sp1, CcgError, CcgOptions};
use elrp::colgen::{ColgenOptions, ColumnPool};
use elrp::evaluate::LeaderDecision;
use elrp::instance::{bundled, Instance};
use elrp::oracle::{
    best_fleet_plan, best_fleet_plan_optimistic, bilevel_exhaustive, enumerate_all,
    EnumerationBudget, OracleError,
};
use elrp::pten::expand;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spanning_decisions(inst: &Instance) -> Vec<LeaderDecision> {
    let n = inst.num_stations();
    let mut out = vec![LeaderDecision::nothing(inst)];
    for s in 0..n {
        let mut ports = vec![0; n];
        ports[s] = inst.stations()[s].size_min.max(1);
        out.push(LeaderDecision::from_ports(inst, &ports));
    }
    let mins: Vec<u32> = inst.stations().iter().map(|s| s.size_min.max(1)).collect();
    let maxs: Vec<u32> = inst.stations().iter().map(|s| s.size_max).collect();
    out.push(LeaderDecision::from_ports(inst, &mins));
    out.push(LeaderDecision::from_ports(inst, &maxs));
    out
}

#[test]
fn follower_problem_matches_enumeration() {
    for name in ["toy", "small_base", "small_tw"] {
        let inst = bundled(name).unwrap();
        let graph = expand(&inst).unwrap();
        let routes = enumerate_all(&graph, &EnumerationBudget::default()).unwrap();
        for d in spanning_decisions(&inst) {
            let (_, want) = best_fleet_plan(&graph, &routes, &d).unwrap();
            let (sp1, _) = solve_sp1(
                &graph,
                &d,
                &mut ColumnPool::new(),
                &ColgenOptions::default(),
            )
            .unwrap();
            assert!(
                (sp1.objective - want).abs() <= 1e-6,
                "{name} {:?}: {} vs {want}",
                d.ports,
                sp1.objective
            );
            let resp = follower_response(&graph, &d, &ColgenOptions::default()).unwrap();
            let (opt, _) = best_fleet_plan_optimistic(&graph, &routes, &d).unwrap();
            let want_leader = d.capex(&inst) - opt.revenue();
            assert!(
                (resp.leader_cost - want_leader).abs() <= 1e-6,
                "{name} {:?}",
                d.ports
            );
        }
    }
}

#[test]
fn bilevel_matches_enumeration_on_random_instances() {
    let shape = Shape {
        max_customers: 3,
        max_stations: 2,
        max_horizon: 9,
    };
    let mut compared = 0;
    for seed in 0..80 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, shape);
        let graph = expand(&inst).unwrap();
        let want = match bilevel_exhaustive(&graph, &EnumerationBudget::default()) {
            Ok(r) => r,
            Err(OracleError::Infeasible) => {
                assert!(matches!(
                    run_ccg(&graph, &CcgOptions::default()),
                    Err(CcgError::Infeasible)
                ));
                continue;
            }
            Err(e) => panic!("seed {seed}: {e}"),
        };
        let got = run_ccg(&graph, &CcgOptions::default()).unwrap();
        assert!(
            (got.leader_cost - want.best.leader_cost).abs()
                <= 1e-6 * want.best.leader_cost.abs().max(1.0),
            "seed {seed}: {} vs {}",
            got.leader_cost,
            want.best.leader_cost
        );
        compared += 1;
    }
    assert!(compared >= 30, "only {compared} feasible instances");
}
