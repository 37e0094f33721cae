//! Dynamic pricing of high-occupancy toll (HOT) lanes.
//!
//! A freeway segment carries HOT lanes and general-purpose (GP) lanes, each a
//! point-queue bottleneck. HOVs use the HOT lanes for free; SOVs pay the toll
//! or queue on the GP lanes according to a binary logit model. A pricing
//! controller sets the toll each step to keep the HOT lanes queue-free and
//! fully used.
//!
//! * [`model`]: queue dynamics, throughputs and queuing times.
//! * [`choice`]: logit lane choice and the induced residual capacity.
//! * [`controller`]: the VOT-estimating controller and two baselines.
//! * [`sim`]: demand, the closed-loop run, trajectories and summaries.
//! * [`analytics`]: closed forms, the reduced model and pattern classification.
//! * [`config`]: TOML scenario files.

// Negated float comparisons are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod choice;
pub mod config;
pub mod controller;
pub mod error;
pub mod model;
pub mod sim;

pub use analytics::{
    analytic_optimal_price, beta, classify_pattern, find_phase_boundary, ApproxScenario,
    ConstantScenarioParams, ConvergencePattern, PatternReport, PhaseModel,
};
pub use choice::{BehaviorParams, NoiseSpec};
pub use config::{load_config, parse_config, ScenarioConfig};
pub use controller::{ControllerSpec, PricingController};
pub use error::{Error, Result};
pub use model::{Capacities, QueueState, StepSize};
pub use sim::{
    run_closed_loop, run_replications, summarize, DemandProfile, SummaryMetrics, SystemState,
    Trajectory,
};
