use crate::error::Result;

use super::{Feedback, PricingController, QuoteInput};

/// Integral controller on the HOT arrival rate: the toll moves by `k_i` for
/// every veh/min of excess over the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralTollState {
    pub u: f64,
    pub k_i: f64,
    pub target_q_hot: f64,
}

impl IntegralTollState {
    pub fn update(self, q_hot: f64) -> Self {
        Self {
            u: self.u + self.k_i * (q_hot - self.target_q_hot),
            ..self
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegralTollController {
    state: IntegralTollState,
}

impl IntegralTollController {
    pub fn new(state: IntegralTollState) -> Self {
        Self { state }
    }

    pub fn state(&self) -> &IntegralTollState {
        &self.state
    }
}

impl PricingController for IntegralTollController {
    fn name(&self) -> &'static str {
        "integral"
    }

    fn quote(&self, _input: &QuoteInput) -> Result<f64> {
        Ok(self.state.u)
    }

    fn observe(&mut self, fb: &Feedback) {
        self.state = self.state.update(fb.hov_demand + fb.paying_demand);
    }

    fn vot_estimate(&self) -> Option<f64> {
        None
    }
}
