//! Scenarios shared by the benchmarks.

use hotlane_core::{ControllerSpec, DemandProfile, NoiseSpec, QueueState, ScenarioConfig};

/// Reference scenario driven by the given controller.
pub fn reference(controller: ControllerSpec) -> ScenarioConfig {
    ScenarioConfig::default().with_controller(controller)
}

/// Reference scenario with Poisson demand and choice noise.
pub fn stochastic(replications: usize) -> ScenarioConfig {
    ScenarioConfig {
        replications,
        demand: DemandProfile::Poisson {
            hov: 10.0,
            sov: 60.0,
        },
        noise: NoiseSpec::Uniform { half_width: 0.1 },
        ..ScenarioConfig::default()
    }
}

/// Reference scenario starting from a one-vehicle HOT queue.
pub fn queued() -> ScenarioConfig {
    ScenarioConfig {
        initial: QueueState { hot: 1.0, gp: 0.0 },
        ..ScenarioConfig::default()
    }
}
