//! Cross-checks the decomposition against brute-force enumeration of every
//! station plan and fleet plan on the bundled small instances.

use elrp::ccg::{run_ccg, CcgOptions};
use elrp::instance::{bundled, InstancePatch};
use elrp::oracle::{bilevel_exhaustive, EnumerationBudget};
use elrp::pten::expand;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["toy", "small_base", "small_tw"] {
        for fee in [0.0, 0.125, 0.3] {
            let inst = bundled(name)?.with_overrides(&InstancePatch::fee(fee))?;
            let graph = expand(&inst)?;
            let oracle = bilevel_exhaustive(&graph, &EnumerationBudget::default())?;
            let sol = run_ccg(&graph, &CcgOptions::default())?;
            let ok = (sol.leader_cost - oracle.best.leader_cost).abs() <= 1e-6;
            println!(
                "{name:<11} fee {fee:<5}  solver {:>10.3}  enumeration {:>10.3}  {}",
                sol.leader_cost,
                oracle.best.leader_cost,
                if ok { "ok" } else { "MISMATCH" }
            );
        }
    }
    Ok(())
}
