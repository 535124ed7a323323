//! Fixtures shared by the benchmarks.

use mpflow_core::catalog::{ScenarioKey, ScenarioSpec};
use mpflow_core::flow::ray_fan;
use mpflow_core::systems::sphere_lift;
use mpflow_core::{MpSystem, Point};

/// Catalog scenario with default parameters.
pub fn scenario(key: ScenarioKey) -> MpSystem<2> {
    ScenarioSpec::new(key).build::<2>().expect("catalog defaults are valid")
}

/// Inbound boundary states of energy `k` from the deterministic ray fan.
pub fn inbound_states(sys: &MpSystem<2>, n: usize) -> Vec<(Point<2>, Point<2>)> {
    ray_fan(sys, n)
        .into_iter()
        .map(|(p, u)| (p, sphere_lift(sys, &p, &u).expect("boundary points lie above the potential")))
        .collect()
}
