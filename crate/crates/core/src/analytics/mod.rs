//! Closed-form results for constant demand, the reduced near-equilibrium
//! model, and the tools used to classify how the closed loop converges.

mod pattern;
mod phase;
mod reduced;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::sim::DemandProfile;

pub use pattern::{
    classify_pattern, ConvergencePattern, PatternReport, PhasePoint, NUMERICAL_FLOOR,
};
pub use phase::{find_phase_boundary, sweep_gain, Gain, PhaseModel};
pub use reduced::{step_approximate, ApproxScenario, ApproxState};

/// Constant-demand scenario with known behaviour parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantScenarioParams {
    pub hov: f64,
    pub sov: f64,
    pub hot_capacity: f64,
    pub gp_capacity: f64,
    pub vot: f64,
    pub scale: f64,
}

impl ConstantScenarioParams {
    /// The reference setup: 10/60 veh/min demand on 30/30 veh/min lanes.
    pub fn reference() -> Self {
        Self {
            hov: 10.0,
            sov: 60.0,
            hot_capacity: 30.0,
            gp_capacity: 30.0,
            vot: 0.5,
            scale: 1.0,
        }
    }

    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        let DemandProfile::Constant { hov, sov } = config.demand else {
            return Err(Error::config(
                "demand.kind",
                "closed-form results need constant demand",
            ));
        };
        let p = Self {
            hov,
            sov,
            hot_capacity: config.capacity.hot,
            gp_capacity: config.capacity.gp,
            vot: config.behavior.vot,
            scale: config.behavior.scale,
        };
        p.check()?;
        Ok(p)
    }

    /// HOVs alone under-use the HOT lanes and the whole corridor is congested.
    pub fn check(&self) -> Result<()> {
        if !(self.hov < self.hot_capacity) {
            return Err(Error::Assumption(format!(
                "HOV demand {} must stay below HOT capacity {}",
                self.hov, self.hot_capacity
            )));
        }
        if !(self.gp_excess() > 0.0) {
            return Err(Error::Assumption(format!(
                "total demand {} must exceed the combined capacity {}",
                self.hov + self.sov,
                self.hot_capacity + self.gp_capacity
            )));
        }
        Ok(())
    }

    /// Growth rate of the GP queue at the optimum, `q1 + q2 - c1 - c2`.
    pub fn gp_excess(&self) -> f64 {
        self.hov + self.sov - self.hot_capacity - self.gp_capacity
    }

    /// Slope of the optimal toll in $/min.
    pub fn price_slope(&self) -> f64 {
        self.gp_excess() / self.gp_capacity * self.vot
    }
}

/// Toll that holds the system at the optimum when the true VOT is known.
/// Affine in `t`.
pub fn analytic_optimal_price(t: f64, p: &ConstantScenarioParams) -> Result<f64> {
    p.check()?;
    let spare = p.hot_capacity - p.hov;
    let excess = p.hov + p.sov - p.hot_capacity;
    Ok(p.price_slope() * t + (excess / spare).ln() / p.scale)
}

/// Gain of the linearised residual-capacity dynamics,
/// `d zeta / dt ≈ beta * t * (k1 * lambda1 - k2 * zeta)`.
pub fn beta(p: &ConstantScenarioParams) -> f64 {
    let spare = p.hot_capacity - p.hov;
    let excess = p.hov + p.sov - p.hot_capacity;
    p.scale * p.gp_excess() * excess * spare / (p.gp_capacity * p.sov)
}

/// Queue-free decay `zeta0 * exp(-beta * k2 * t^2 / 2)`.
pub fn gaussian_tail(zeta0: f64, t: f64, beta: f64, k2: f64) -> f64 {
    zeta0 * (-0.5 * beta * k2 * t * t).exp()
}

/// Queued decay on the slow manifold `zeta = (k1 / k2) * lambda1`.
/// Returns `(lambda1, zeta)`.
pub fn exponential_tail(lambda10: f64, t: f64, k1: f64, k2: f64) -> (f64, f64) {
    let rate = k1 / k2;
    let lambda1 = lambda10 * (-rate * t).exp();
    (lambda1, rate * lambda1)
}
