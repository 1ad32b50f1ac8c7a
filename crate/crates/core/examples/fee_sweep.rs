//! Sweeps the service fee and compares the two-entity outcome with a single
//! planner minimizing total cost.

use elrp::ccg::CcgOptions;
use elrp::cli::{default_fee_grid, fee_sweep};
use elrp::instance::bundled;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "small_base".into());
    let inst = bundled(&name)?;
    let points = fee_sweep(&inst, &default_fee_grid(), &CcgOptions::default(), 4);
    println!(
        "{:>5} {:>10} {:>10} {:>8} {:>6} {:>12}",
        "fee", "fleet op", "provider", "energy", "sites", "joint total"
    );
    for p in points {
        let (b, _) = p.bilevel.map_err(|e| format!("fee {}: {e}", p.fee))?;
        let joint = p
            .joint
            .map(|(j, _)| j.fo_cost + j.csp_cost())
            .unwrap_or(f64::NAN);
        println!(
            "{:>5.2} {:>10.1} {:>10.1} {:>8.1} {:>6} {:>12.1}",
            p.fee,
            b.fo_cost,
            b.csp_cost(),
            b.energy_sold,
            b.stations_built,
            joint
        );
    }
    Ok(())
}
