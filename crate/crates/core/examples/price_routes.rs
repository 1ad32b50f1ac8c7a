//! Runs the labeling algorithm with hand-picked coverage duals and lists the
//! routes with negative reduced cost.

use elrp::instance::bundled;
use elrp::pten::expand;
use elrp::spprc::{solve_pricing, Dominance, PricingContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = expand(&bundled("small_base")?)?;
    for dominance in [Dominance::Exact, Dominance::Off] {
        let mut ctx = PricingContext::new(&graph, 0);
        ctx.cover_dual = vec![3000.0; graph.instance().num_customers()];
        ctx.dominance = dominance;
        ctx.max_routes = Some(5);
        let res = solve_pricing(&graph, &ctx);
        println!(
            "{dominance:?}: best reduced cost {:.3}, {} labels created, {} dominated",
            res.best_reduced_cost, res.stats.labels_created, res.stats.labels_dominated
        );
        for p in &res.routes {
            let path: Vec<String> = p.route.nodes().map(|n| graph.node_name(n)).collect();
            println!("  {:>10.3}  {}", p.reduced_cost, path.join(" "));
        }
    }
    Ok(())
}
