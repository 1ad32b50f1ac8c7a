//! Solves the fleet operator's problem for a few fixed station plans with
//! column generation and integer recovery.

use elrp::ccg::follower_response;
use elrp::colgen::ColgenOptions;
use elrp::evaluate::LeaderDecision;
use elrp::instance::{bundled, InstancePatch};
use elrp::pten::expand;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = bundled("small_base")?.with_overrides(&InstancePatch::fee(0.25))?;
    let graph = expand(&inst)?;
    for ports in [[0, 0], [1, 0], [0, 1], [1, 1], [0, 2]] {
        let d = LeaderDecision::from_ports(&inst, &ports);
        let resp = follower_response(&graph, &d, &ColgenOptions::default())?;
        let plan = resp.optimistic.as_ref().unwrap_or(&resp.cheapest);
        println!(
            "ports {ports:?}: follower cost {:>10.2}  trucks {:?}  energy {:>5.1} kWh  leader cost {:>9.2}",
            resp.theta,
            plan.fleet(&inst),
            plan.energy_sold(),
            resp.leader_cost
        );
    }
    Ok(())
}
