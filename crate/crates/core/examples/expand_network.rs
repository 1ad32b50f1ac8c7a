//! Loads a bundled instance and prints its partial time-expanded network.
//!
//! `cargo run --example expand_network -- small_base`

use elrp::instance::bundled;
use elrp::pten::{expand, ArcKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "toy".into());
    let inst = bundled(&name)?;
    let graph = expand(&inst)?;
    let mut by_kind = std::collections::BTreeMap::new();
    for (_, arc) in graph.arcs() {
        *by_kind.entry(format!("{:?}", arc.kind)).or_insert(0usize) += 1;
    }
    println!(
        "{}: {} customers, {} stations, horizon {}",
        inst.name(),
        inst.num_customers(),
        inst.num_stations(),
        inst.horizon()
    );
    println!("{} nodes, {} arcs", graph.num_nodes(), graph.num_arcs());
    for (kind, n) in by_kind {
        println!("  {kind:<10} {n}");
    }
    let internal = graph
        .arcs()
        .filter(|(_, a)| a.kind == ArcKind::Internal)
        .take(3)
        .map(|(_, a)| format!("{} -> {}", graph.node_name(a.from), graph.node_name(a.to)))
        .collect::<Vec<_>>();
    println!("first charging arcs: {}", internal.join(", "));
    Ok(())
}
