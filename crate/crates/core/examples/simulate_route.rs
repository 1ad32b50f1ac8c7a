//! Walks a truck through a route with one charging stop and prints its
//! resource trajectory and cost breakdown.

use elrp::evaluate::simulate_route;
use elrp::instance::bundled;
use elrp::pten::{expand, DEPOT, SINK};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = expand(&bundled("toy")?)?;
    let nodes = [
        DEPOT,
        graph.customer_node(0),
        graph.dummy(0, 2, 1).expect("slot exists"),
        graph.dummy(0, 3, 1).expect("slot exists"),
        graph.customer_node(1),
        SINK,
    ];
    let route = simulate_route(&graph, 0, &nodes)?;
    println!(
        "{:<10} {:>7} {:>5} {:>9} {:>8} {:>8}",
        "node", "arrive", "start", "depart", "load", "battery"
    );
    for v in &route.visits {
        println!(
            "{:<10} {:>7} {:>5} {:>9} {:>8.2} {:>8.2}",
            graph.node_name(v.node),
            v.arrival,
            v.start,
            v.departure,
            v.load_after,
            v.energy_after
        );
    }
    println!("distance        {:.2}", route.distance);
    println!("vehicle cost    {:.2}", route.vehicle_cost);
    println!("travel cost     {:.2}", route.travel_cost);
    println!("charging cost   {:.2}", route.charging_cost);
    println!("route cost      {:.2}", route.cost);
    println!("service revenue {:.2}", route.revenue);
    Ok(())
}
