//! Point-queue dynamics for a freeway segment with HOT and general-purpose
//! (GP) lanes, written in terms of the HOT residual capacity
//! `zeta = c_hot - q_hov - q_paying`.
//!
//! All rates are in vehicles per minute, queues in vehicles and times in
//! minutes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bottleneck capacities of the two lane groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Capacities {
    pub hot: f64,
    pub gp: f64,
}

impl Default for Capacities {
    /// One HOT and one GP lane at 30 veh/min each.
    fn default() -> Self {
        Self {
            hot: 30.0,
            gp: 30.0,
        }
    }
}

impl Capacities {
    pub fn new(hot: f64, gp: f64) -> Result<Self> {
        if !(hot > 0.0 && hot.is_finite()) {
            return Err(Error::config("capacity.hot", "must be positive and finite"));
        }
        if !(gp > 0.0 && gp.is_finite()) {
            return Err(Error::config("capacity.gp", "must be positive and finite"));
        }
        Ok(Self { hot, gp })
    }
}

/// Vertical queue sizes on the HOT and GP lanes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueState {
    pub hot: f64,
    pub gp: f64,
}

/// Demands, residual capacity and throughputs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSnapshot {
    pub hov_demand: f64,
    pub sov_demand: f64,
    pub paying_demand: f64,
    pub residual: f64,
    pub hot_throughput: f64,
    pub gp_throughput: f64,
}

/// Queuing times and their difference `gp - hot` (may be negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingState {
    pub hot: f64,
    pub gp: f64,
    pub difference: f64,
}

/// Simulation step in minutes. Also stands in for the relaxation constant of
/// the continuous queue equations.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StepSize(f64);

impl StepSize {
    pub fn new(dt: f64) -> Result<Self> {
        if dt > 0.0 && dt.is_finite() {
            Ok(Self(dt))
        } else {
            Err(Error::config(
                "time.dt",
                format!("step size must be positive, got {dt}"),
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StepSize {
    type Error = Error;
    fn try_from(dt: f64) -> Result<Self> {
        Self::new(dt)
    }
}

impl From<StepSize> for f64 {
    fn from(dt: StepSize) -> f64 {
        dt.0
    }
}

/// HOT capacity left over after HOVs and paying SOVs.
#[inline]
pub fn residual_capacity(hot_capacity: f64, hov_demand: f64, paying_demand: f64) -> f64 {
    hot_capacity - hov_demand - paying_demand
}

/// Advances both queues by one step.
pub fn step_point_queues(
    queues: QueueState,
    residual: f64,
    hov_demand: f64,
    sov_demand: f64,
    caps: Capacities,
    dt: StepSize,
) -> QueueState {
    let dt = dt.get();
    let gp_net_inflow = hov_demand + sov_demand - caps.gp - caps.hot + residual;
    QueueState {
        hot: (queues.hot - residual * dt).max(0.0),
        gp: (queues.gp + gp_net_inflow * dt).max(0.0),
    }
}

/// Discharge rates `(hot, gp)` over the coming step, clamped to `[0, capacity]`.
pub fn throughputs(
    queues: QueueState,
    residual: f64,
    hov_demand: f64,
    sov_demand: f64,
    caps: Capacities,
    dt: StepSize,
) -> (f64, f64) {
    let dt = dt.get();
    let hot = (caps.hot - residual + queues.hot / dt)
        .min(caps.hot)
        .max(0.0);
    let gp = (hov_demand + sov_demand - caps.hot + residual + queues.gp / dt)
        .min(caps.gp)
        .max(0.0);
    (hot, gp)
}

pub fn queuing_times(queues: QueueState, caps: Capacities) -> TimingState {
    let hot = queues.hot / caps.hot;
    let gp = queues.gp / caps.gp;
    TimingState {
        hot,
        gp,
        difference: gp - hot,
    }
}
