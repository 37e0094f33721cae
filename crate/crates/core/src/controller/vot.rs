use crate::error::{Error, Result};
use crate::model::{Capacities, StepSize};

use super::{Feedback, PricingController, QuoteInput};

/// Integral estimator of the mean value of time.
///
/// The estimate rises while a HOT queue exists and falls while HOT capacity
/// goes unused: `d pi / dt = k1 * queue - k2 * residual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VotEstimatorState {
    /// Estimated mean value of time ($/min).
    pub pi: f64,
    /// Queue gain ($/min² per vehicle).
    pub k1: f64,
    /// Residual-capacity gain ($/min per veh/min).
    pub k2: f64,
    /// Operator's guess of the logit scale (1/$).
    pub alpha_guess: f64,
}

impl VotEstimatorState {
    /// One explicit Euler step of the estimator.
    pub fn update(self, hot_queue: f64, residual: f64, dt: StepSize) -> Self {
        Self {
            pi: self.pi + dt.get() * (self.k1 * hot_queue - self.k2 * residual),
            ..self
        }
    }

    /// Toll that would exactly fill the HOT lanes if the estimate were right.
    pub fn price(
        &self,
        delay_saving: f64,
        hov_demand: f64,
        sov_demand: f64,
        hot_capacity: f64,
    ) -> Result<f64> {
        let log_term = congestion_log_term(hov_demand, sov_demand, hot_capacity)?;
        Ok(self.pi * delay_saving + log_term / self.alpha_guess)
    }
}

/// `ln((q_hov + q_sov - c_hot) / (c_hot - q_hov))`, defined only when the HOT
/// lanes are under-used by HOVs alone and the total demand exceeds them.
pub fn congestion_log_term(hov_demand: f64, sov_demand: f64, hot_capacity: f64) -> Result<f64> {
    let excess = hov_demand + sov_demand - hot_capacity;
    let spare = hot_capacity - hov_demand;
    if spare <= 0.0 {
        return Err(Error::Assumption(format!(
            "HOV demand {hov_demand} must stay below HOT capacity {hot_capacity}"
        )));
    }
    if excess <= 0.0 {
        return Err(Error::Assumption(format!(
            "total demand {} must exceed HOT capacity {hot_capacity}",
            hov_demand + sov_demand
        )));
    }
    Ok((excess / spare).ln())
}

#[derive(Debug, Clone)]
pub struct VotController {
    state: VotEstimatorState,
    caps: Capacities,
}

impl VotController {
    pub fn new(state: VotEstimatorState, caps: Capacities) -> Self {
        Self { state, caps }
    }

    pub fn state(&self) -> &VotEstimatorState {
        &self.state
    }
}

impl PricingController for VotController {
    fn name(&self) -> &'static str {
        "vot"
    }

    fn quote(&self, input: &QuoteInput) -> Result<f64> {
        self.state.price(
            input.delay_saving,
            input.hov_demand,
            input.sov_demand,
            self.caps.hot,
        )
    }

    fn observe(&mut self, fb: &Feedback) {
        self.state = self.state.update(fb.hot_queue, fb.residual, fb.dt);
    }

    fn vot_estimate(&self) -> Option<f64> {
        Some(self.state.pi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{induced_residual_capacity, BehaviorParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn est(pi: f64) -> VotEstimatorState {
        VotEstimatorState {
            pi,
            k1: 0.1,
            k2: 0.1,
            alpha_guess: 1.0,
        }
    }

    fn dt() -> StepSize {
        StepSize::new(1.0 / 60.0).unwrap()
    }

    #[test]
    fn update_examples() {
        assert_eq!(est(0.5).update(0.0, 0.0, dt()).pi, 0.5);
        assert_relative_eq!(est(0.5).update(1.0, 0.0, dt()).pi, 0.501667, epsilon = 1e-6);
        assert_relative_eq!(
            est(0.5).update(0.0, 0.11, dt()).pi,
            0.499817,
            epsilon = 1e-6
        );
    }

    #[test]
    fn price_examples() {
        let u = est(0.5).price(20.0 / 3.0, 10.0, 60.0, 30.0).unwrap();
        assert_relative_eq!(u, 4.0265, epsilon = 1e-4);
        let u = est(0.5).price(0.0, 10.0, 60.0, 30.0).unwrap();
        assert_relative_eq!(u, std::f64::consts::LN_2, epsilon = 1e-15);
        let guessed = VotEstimatorState {
            alpha_guess: 1.2,
            ..est(0.5)
        };
        assert_relative_eq!(
            guessed.price(20.0 / 3.0, 10.0, 60.0, 30.0).unwrap(),
            3.9110,
            epsilon = 1e-4
        );
    }

    #[test]
    fn price_outside_congested_regime() {
        assert!(matches!(
            est(0.5).price(1.0, 30.0, 60.0, 30.0),
            Err(Error::Assumption(_))
        ));
        assert!(matches!(
            est(0.5).price(1.0, 10.0, 15.0, 30.0),
            Err(Error::Assumption(_))
        ));
    }

    proptest! {
        #[test]
        fn update_is_linear(queue in 0.0f64..10.0, residual in -10.0f64..10.0) {
            let s = est(0.4);
            let d1 = s.update(queue, residual, dt()).pi - s.pi;
            let d2 = s.update(2.0 * queue, 2.0 * residual, dt()).pi - s.pi;
            prop_assert!((d2 - 2.0 * d1).abs() < 1e-14);
        }

        #[test]
        fn true_parameters_give_zero_residual(w in -5.0f64..30.0) {
            let truth = BehaviorParams::default();
            let u = est(truth.vot).price(w, 10.0, 60.0, 30.0).unwrap();
            let z = induced_residual_capacity(30.0, 10.0, 60.0, u, w, 0.0, &truth);
            prop_assert!(z.abs() < 1e-10, "zeta = {}", z);
        }
    }
}
