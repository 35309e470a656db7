//! Fixtures shared by the simulator benchmarks.

use uavnet_core::routing::build_graph;
use uavnet_core::{SimConfig, Simulation, UavGraph};

/// Default scenario with a coarse grid, run for `ticks` ticks.
pub fn scenario(num_users: usize, ticks: u64) -> SimConfig {
    SimConfig {
        num_users,
        ticks,
        grid_step: 10.0,
        ..SimConfig::default()
    }
}

/// A simulation advanced past the surge, so the fleet is at its largest.
pub fn settled(num_users: usize) -> Simulation {
    let cfg = scenario(num_users, 0);
    let mut sim = Simulation::new(cfg.clone()).expect("valid scenario");
    for _ in 0..=cfg.surge_tick + 2 {
        sim.step().expect("tick runs");
    }
    sim
}

pub fn routing_graph(sim: &Simulation) -> UavGraph {
    build_graph(&sim.state, &sim.cfg).expect("root present")
}
