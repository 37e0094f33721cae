use nalgebra::{Matrix3, RowVector3, Vector3};

use crate::error::{Error, Result};
use crate::model::Capacities;

use super::{Feedback, PricingController, QuoteInput};

/// Smallest |price coefficient| for which the logit can be inverted.
const MIN_PRICE_COEFFICIENT: f64 = 1e-6;

/// Kalman filter over willingness-to-pay parameters
/// `theta = [time coefficient, price coefficient, bias]`.
///
/// The observation is the log-odds of *not* paying,
/// `ln((q_sov - q_paying) / q_paying) = -a1 * w + a2 * u + gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfLearningState {
    pub theta: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    /// Measurement-noise variance.
    pub r: f64,
    pub q_proc: Matrix3<f64>,
}

impl SelfLearningState {
    pub fn new(theta0: [f64; 3], cov0: f64, r: f64, q_proc: f64) -> Self {
        Self {
            theta: Vector3::from(theta0),
            covariance: Matrix3::identity() * cov0,
            r,
            q_proc: Matrix3::identity() * q_proc,
        }
    }

    /// Implied mean value of time, `a1 / a2`.
    pub fn vot(&self) -> f64 {
        self.theta[0] / self.theta[1]
    }

    /// One predict/update cycle from an observed paying demand.
    pub fn observe(
        &self,
        sov_demand: f64,
        paying_demand: f64,
        delay_saving: f64,
        toll: f64,
    ) -> Self {
        if !(sov_demand > 0.0) {
            return self.clone();
        }
        let delta = 1e-6 * sov_demand;
        let paying = paying_demand.clamp(delta, sov_demand - delta);
        let y = ((sov_demand - paying) / paying).ln();
        let h = RowVector3::new(-delay_saving, toll, 1.0);

        let prior = self.covariance + self.q_proc;
        let innovation = y - (h * self.theta)[0];
        let s = (h * prior * h.transpose())[0] + self.r;
        let gain = prior * h.transpose() / s;

        let theta = self.theta + gain * innovation;
        // Joseph form keeps the covariance symmetric positive semidefinite.
        let i_kh = Matrix3::identity() - gain * h;
        let p = i_kh * prior * i_kh.transpose() + gain * self.r * gain.transpose();
        let covariance = (p + p.transpose()) * 0.5;

        Self {
            theta,
            covariance,
            r: self.r,
            q_proc: self.q_proc,
        }
    }

    /// Toll that makes the predicted paying demand equal `target_paying`.
    pub fn price(&self, sov_demand: f64, delay_saving: f64, target_paying: f64) -> Result<f64> {
        let [a1, a2, gamma] = [self.theta[0], self.theta[1], self.theta[2]];
        if !(a2.abs() >= MIN_PRICE_COEFFICIENT) {
            return Err(Error::PriceUndefined(format!(
                "estimated price coefficient {a2:e} is too close to zero to invert the logit"
            )));
        }
        if !(target_paying > 0.0 && target_paying < sov_demand) {
            return Err(Error::Assumption(format!(
                "target paying demand {target_paying} must lie strictly between 0 and SOV demand {sov_demand}"
            )));
        }
        let log_odds = ((sov_demand - target_paying) / target_paying).ln();
        Ok((log_odds + a1 * delay_saving - gamma) / a2)
    }
}

#[derive(Debug, Clone)]
pub struct SelfLearningController {
    state: SelfLearningState,
    caps: Capacities,
}

impl SelfLearningController {
    pub fn new(state: SelfLearningState, caps: Capacities) -> Self {
        Self { state, caps }
    }

    pub fn state(&self) -> &SelfLearningState {
        &self.state
    }
}

impl PricingController for SelfLearningController {
    fn name(&self) -> &'static str {
        "self_learning"
    }

    fn quote(&self, input: &QuoteInput) -> Result<f64> {
        let target = self.caps.hot - input.hov_demand;
        self.state
            .price(input.sov_demand, input.delay_saving, target)
    }

    fn observe(&mut self, fb: &Feedback) {
        self.state = self
            .state
            .observe(fb.sov_demand, fb.paying_demand, fb.delay_saving, fb.toll);
    }

    fn vot_estimate(&self) -> Option<f64> {
        Some(self.state.vot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Paying demand that the parameters `[a1, a2, gamma]` predict.
    fn paying_for(theta: [f64; 3], q2: f64, w: f64, u: f64) -> f64 {
        q2 / (1.0 + (-theta[0] * w + theta[1] * u + theta[2]).exp())
    }

    #[test]
    fn zero_innovation_keeps_theta() {
        let s = SelfLearningState::new([0.5, 1.0, 0.0], 0.1, 0.09, 0.0);
        let q3 = paying_for([0.5, 1.0, 0.0], 60.0, 2.0, 1.5);
        let next = s.observe(60.0, q3, 2.0, 1.5);
        assert!((next.theta - s.theta).norm() < 1e-12);
        assert!(next.covariance.trace() <= s.covariance.trace());
    }

    #[test]
    fn one_step_matches_hand_update() {
        // prior theta [0.25, 1, 0.1], P = I, h = [-1, 1, 1], y = 0.5:
        // S = 3.09, innovation = -0.35, K = h' / 3.09
        let s = SelfLearningState::new([0.25, 1.0, 0.1], 1.0, 0.09, 0.0);
        let q3 = paying_for([0.5, 1.0, 0.0], 60.0, 1.0, 1.0);
        let next = s.observe(60.0, q3, 1.0, 1.0);
        let step = 0.35 / 3.09;
        assert_relative_eq!(next.theta[0], 0.25 + step, epsilon = 1e-12);
        assert_relative_eq!(next.theta[1], 1.0 - step, epsilon = 1e-12);
        assert_relative_eq!(next.theta[2], 0.1 - step, epsilon = 1e-12);
        let h = [-1.0, 1.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 } - h[i] * h[j] / 3.09;
                assert_relative_eq!(next.covariance[(i, j)], expected, epsilon = 1e-12);
            }
        }
        let truth = Vector3::new(0.5, 1.0, 0.0);
        assert!((next.theta - truth).norm() < (s.theta - truth).norm());
    }

    #[test]
    fn uninformative_measurement() {
        let s = SelfLearningState::new([0.25, 1.0, 0.1], 0.1, 1e12, 0.0);
        let next = s.observe(60.0, 20.0, 3.0, 2.0);
        assert!((next.theta - s.theta).norm() < 1e-10);
    }

    #[test]
    fn price_examples() {
        let s = SelfLearningState::new([0.5, 1.0, 0.0], 0.1, 0.09, 0.0);
        assert_relative_eq!(
            s.price(60.0, 20.0 / 3.0, 20.0).unwrap(),
            4.0265,
            epsilon = 1e-4
        );
        assert_relative_eq!(s.price(60.0, 0.0, 20.0).unwrap(), std::f64::consts::LN_2);
        let shifted = SelfLearningState::new([0.5, 2.0, 0.3], 0.1, 0.09, 0.0);
        let base = SelfLearningState::new([0.5, 2.0, 0.0], 0.1, 0.09, 0.0);
        let du = base.price(60.0, 3.0, 20.0).unwrap() - shifted.price(60.0, 3.0, 20.0).unwrap();
        assert_relative_eq!(du, 0.3 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn price_undefined_near_zero_coefficient() {
        let s = SelfLearningState::new([0.5, 0.0, 0.0], 0.1, 0.09, 0.0);
        assert!(matches!(
            s.price(60.0, 1.0, 20.0),
            Err(Error::PriceUndefined(_))
        ));
        let s = SelfLearningState::new([0.5, 1.0, 0.0], 0.1, 0.09, 0.0);
        assert!(matches!(
            s.price(60.0, 1.0, 60.0),
            Err(Error::Assumption(_))
        ));
    }

    #[test]
    fn boundary_paying_demand_is_clamped() {
        let s = SelfLearningState::new([0.25, 1.0, 0.1], 0.1, 0.09, 1e-6);
        for q3 in [0.0, 60.0] {
            let next = s.observe(60.0, q3, 1.0, 1.0);
            assert!(next.theta.iter().all(|v| v.is_finite()));
        }
        assert_eq!(s.observe(0.0, 0.0, 1.0, 1.0), s);
    }

    #[test]
    fn covariance_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = SelfLearningState::new([0.25, 1.0, 0.1], 0.1, 0.09, 1e-6);
        for _ in 0..1000 {
            let q2 = rng.random_range(1.0..120.0);
            let q3 = rng.random_range(0.0..=q2);
            let w = rng.random_range(-2.0..20.0);
            let u = rng.random_range(-1.0..10.0);
            s = s.observe(q2, q3, w, u);
            let p = s.covariance;
            assert!((p - p.transpose()).abs().max() < 1e-15);
            let eig = SymmetricEigen::new(p).eigenvalues;
            assert!(eig.min() >= -1e-9, "eigenvalues {eig:?}");
        }
    }
}
