//! Shared fixtures for the pipeline benchmarks.

use netstate_core::sim::{self, NetworkState, ScenarioConfig};

/// The bundled three-data-center scenario.
pub fn three_dc() -> ScenarioConfig {
    ScenarioConfig::from_toml_str(include_str!("../../../scenarios/three_dc.toml")).expect("bundled scenario parses")
}

/// A seeded trajectory of `horizon` steps over [`three_dc`].
pub fn trajectory(horizon: u64) -> Vec<NetworkState> {
    sim::run(&three_dc(), horizon, 42).expect("bundled scenario runs")
}
