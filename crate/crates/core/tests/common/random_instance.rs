//! Seeded random instances small enough for exhaustive enumeration.

use elrp::instance::{
    Customer, Depot, Economics, Edge, Instance, InstanceFile, Meta, StationCandidate, VehicleType,
};
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_customers: usize,
    pub max_stations: usize,
    pub max_horizon: u32,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_customers: 4,
            max_stations: 2,
            max_horizon: 10,
        }
    }
}

/// Sites on a small integer grid, every pair linked, batteries short enough
/// that some routes need a charge.
pub fn random_instance<R: Rng>(rng: &mut R, shape: Shape) -> Instance {
    let n_cust = rng.gen_range(1..=shape.max_customers);
    let n_st = rng.gen_range(1..=shape.max_stations);
    let horizon = rng.gen_range(6..=shape.max_horizon);
    let mut names = vec!["D0".to_string()];
    names.extend((1..=n_cust).map(|c| format!("C{c}")));
    names.extend((1..=n_st).map(|s| format!("F{s}")));
    let pos: Vec<(i32, i32)> = names
        .iter()
        .map(|_| (rng.gen_range(0..4), rng.gen_range(0..4)))
        .collect();

    let mut edges = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let d = ((dx * dx + dy * dy) as f64).sqrt().max(1.0);
            edges.push(Edge {
                from: names[a].clone(),
                to: names[b].clone(),
                distance: (d * 4.0).round() / 4.0,
                travel_time: d.ceil() as u32,
            });
        }
    }
    let customers = (1..=n_cust)
        .map(|c| {
            let early = rng.gen_range(0..horizon / 2);
            let late = rng.gen_range(early + 1..=horizon);
            Customer {
                id: format!("C{c}"),
                demand: rng.gen_range(1..=4) as f64 * 5.0,
                window_early: early,
                window_late: late,
                service_time: rng.gen_range(0..=1),
            }
        })
        .collect();
    let stations = (1..=n_st)
        .map(|s| {
            let size_max = rng.gen_range(1..=2);
            StationCandidate {
                id: format!("F{s}"),
                grid_capacity: vec![rng.gen_range(1..=3) as f64 * 10.0; horizon as usize],
                rated_power: [5.0, 10.0][rng.gen_range(0..2)],
                port_cost: rng.gen_range(1..=4) as f64 * 500.0,
                upgrade_cost: 100.0,
                electricity_price: (0..horizon)
                    .map(|_| rng.gen_range(1..=3) as f64 * 0.05)
                    .collect(),
                size_min: 1,
                size_max,
                feasible_slots: if rng.gen_bool(0.3) {
                    Some(rng.gen_range(2..=horizon))
                } else {
                    None
                },
            }
        })
        .collect();
    let vehicle_types = (1..=rng.gen_range(1..=2u32))
        .map(|id| VehicleType {
            id,
            freight_capacity: rng.gen_range(2..=4) as f64 * 10.0,
            battery_capacity: rng.gen_range(4..=8) as f64 * 5.0,
            consumption_rate: 5.0,
            purchase_cost: rng.gen_range(5..=12) as f64 * 1000.0,
            travel_cost_per_length: rng.gen_range(1..=4) as f64 * 0.25,
        })
        .collect();
    let file = InstanceFile {
        schema: 1,
        meta: Meta {
            name: "random".into(),
            description: String::new(),
        },
        economics: Economics {
            discount_rate: 0.05,
            station_life_years: 20,
            vehicle_life_years: 10,
            service_fee: (0..n_st)
                .map(|_| rng.gen_range(0..=4) as f64 * 0.05)
                .collect(),
            time_step_hours: 1.0,
            horizon,
            duty_cycles_per_year: 250.0,
            max_route_length: None,
        },
        depot: Depot { id: "D0".into() },
        customers,
        stations,
        vehicle_types,
        edges,
    };
    Instance::from_file(file).expect("generator emits valid instances")
}

/// Random coverage and port-usage duals of the given magnitude.
pub fn random_duals<R: Rng>(
    rng: &mut R,
    instance: &Instance,
    scale: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let cover = (0..instance.num_customers())
        .map(|_| rng.gen_range(0.0..scale))
        .collect();
    let usage = (0..instance.num_stations())
        .map(|_| {
            (0..instance.horizon())
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        rng.gen_range(0.0..scale / 10.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    (cover, usage)
}
