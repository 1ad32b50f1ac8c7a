//! Compares charger ratings at one station, pricing faster chargers higher.

use elrp::ccg::CcgOptions;
use elrp::cli::rate_study;
use elrp::instance::{bundled, InstancePatch};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = bundled("small_tw")?.with_overrides(&InstancePatch::fee(0.25))?;
    let rates = [10.0, 15.0, 20.0];
    let port_costs = [10_500.0, 12_000.0, 12_500.0];
    let points = rate_study(&inst, "F2", &rates, &port_costs, &CcgOptions::default(), 3)?;
    for p in points {
        let (s, _) = p.result.map_err(|e| format!("rate {}: {e}", p.rate))?;
        println!(
            "{:>4} kW  port {:>7.0}  fleet op {:>9.1}  provider profit {:>8.1}  energy {:>5.1}",
            p.rate,
            p.port_cost,
            s.fo_cost,
            -s.csp_cost(),
            s.energy_sold
        );
    }
    Ok(())
}
