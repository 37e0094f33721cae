use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StepSize;

use super::PhasePoint;

/// State of the reduced model: HOT queue, residual capacity and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxState {
    pub lambda1: f64,
    pub zeta: f64,
    pub t: f64,
}

/// One explicit Euler step of the reduced queue/residual-capacity system.
pub fn step_approximate(s: ApproxState, k1: f64, k2: f64, beta: f64, dt: StepSize) -> ApproxState {
    let h = dt.get();
    ApproxState {
        lambda1: (s.lambda1 - s.zeta * h).max(0.0),
        zeta: s.zeta + h * beta * s.t * (k1 * s.lambda1 - k2 * s.zeta),
        t: s.t + h,
    }
}

/// Initial condition, gains and grid for integrating the reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxScenario {
    pub k1: f64,
    pub k2: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub zeta: f64,
    pub horizon: f64,
    pub dt: StepSize,
}

impl ApproxScenario {
    /// The reduced-model experiment: `(lambda1, zeta)(0) = (1, 0.11)` with
    /// `beta = 40/9` over 20 minutes at 1/60 minute steps.
    pub fn reference(k1: f64, k2: f64) -> Self {
        Self {
            k1,
            k2,
            beta: 40.0 / 9.0,
            lambda1: 1.0,
            zeta: 0.11,
            horizon: 20.0,
            dt: StepSize::new(1.0 / 60.0).expect("positive"),
        }
    }

    pub fn steps(&self) -> Result<usize> {
        let ratio = self.horizon / self.dt.get();
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > 1e-9 * ratio {
            return Err(Error::config("time.dt", "step does not divide the horizon"));
        }
        Ok(n as usize)
    }

    /// All states from `t = 0` to the horizon inclusive.
    pub fn run(&self) -> Result<Vec<ApproxState>> {
        let steps = self.steps()?;
        let mut s = ApproxState {
            lambda1: self.lambda1,
            zeta: self.zeta,
            t: 0.0,
        };
        let mut out = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            // pin t to the grid so long runs do not drift
            s.t = k as f64 * self.dt.get();
            out.push(s);
            s = step_approximate(s, self.k1, self.k2, self.beta, self.dt);
        }
        Ok(out)
    }
}

impl From<&ApproxState> for PhasePoint {
    fn from(s: &ApproxState) -> Self {
        PhasePoint {
            t: s.t,
            lambda1: s.lambda1,
            zeta: s.zeta,
        }
    }
}
