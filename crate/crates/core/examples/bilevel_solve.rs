//! Solves the leader-follower game on one instance and prints the bound
//! history of the column-and-constraint generation loop.
//!
//! `cargo run --release --example bilevel_solve -- small_tw 0.25`

use elrp::ccg::{run_ccg, CcgOptions};
use elrp::instance::{bundled, InstancePatch};
use elrp::pten::expand;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "small_base".into());
    let fee: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.25);
    let inst = bundled(&name)?.with_overrides(&InstancePatch::fee(fee))?;
    let graph = expand(&inst)?;
    let sol = run_ccg(&graph, &CcgOptions::default())?;
    for it in &sol.iterations {
        println!(
            "iter {:>2}  lb {:>12.3}  ub {:>12.3}  gap {:>10.3}",
            it.iter, it.lower_bound, it.upper_bound, it.gap
        );
    }
    println!("ports          {:?}", sol.decision.ports);
    println!("leader cost    {:.3}", sol.leader_cost);
    println!("follower cost  {:.3}", sol.follower_cost);
    for r in &sol.plan.routes {
        let path: Vec<String> = r.nodes().map(|n| graph.node_name(n)).collect();
        println!(
            "  type {}  {}",
            inst.vehicle_types()[r.vehicle].id,
            path.join(" ")
        );
    }
    Ok(())
}
