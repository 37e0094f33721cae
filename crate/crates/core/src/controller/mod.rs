//! Pricing controllers.
//!
//! Every controller follows the same two-phase loop per step: `quote` a toll
//! from the current measurements, then `observe` the traffic response once the
//! queues have been advanced.

mod integral;
mod self_learning;
mod vot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Capacities, StepSize};

pub use integral::{IntegralTollController, IntegralTollState};
pub use self_learning::{SelfLearningController, SelfLearningState};
pub use vot::{congestion_log_term, VotController, VotEstimatorState};

/// Measurements available when quoting the toll for a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuoteInput {
    pub t: f64,
    /// Queuing-time difference GP minus HOT (minutes).
    pub delay_saving: f64,
    pub hov_demand: f64,
    pub sov_demand: f64,
}

/// What the operator sees after drivers have reacted to the quoted toll.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub dt: StepSize,
    pub toll: f64,
    pub delay_saving: f64,
    pub hov_demand: f64,
    pub sov_demand: f64,
    pub paying_demand: f64,
    /// HOT queue at the start of the step.
    pub hot_queue: f64,
    pub residual: f64,
}

pub trait PricingController: Send {
    fn name(&self) -> &'static str;

    /// Toll for the current step. Deterministic in the controller state and
    /// the inputs.
    fn quote(&self, input: &QuoteInput) -> Result<f64>;

    fn observe(&mut self, feedback: &Feedback);

    /// Current estimate of the mean value of time, if the strategy keeps one.
    fn vot_estimate(&self) -> Option<f64>;
}

/// Controller selection and tuning, as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// Integral VOT estimator with the logit-inverting price law.
    Vot {
        #[serde(default = "defaults::k1")]
        k1: f64,
        #[serde(default = "defaults::k2")]
        k2: f64,
        /// Operator's guess of the logit scale; the true scale when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_guess: Option<f64>,
        #[serde(default = "defaults::pi0")]
        pi0: f64,
    },
    /// Integral controller acting directly on the toll.
    Integral {
        #[serde(default = "defaults::k_i")]
        k_i: f64,
        #[serde(default = "defaults::u0")]
        u0: f64,
        /// Desired HOT arrival rate; the HOT capacity when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<f64>,
    },
    /// Kalman filter on willingness-to-pay parameters.
    SelfLearning {
        #[serde(default = "defaults::theta0")]
        theta0: [f64; 3],
        #[serde(default = "defaults::cov0")]
        cov0: f64,
        #[serde(default = "defaults::r")]
        r: f64,
        #[serde(default = "defaults::q_proc")]
        q_proc: f64,
    },
}

pub(crate) mod defaults {
    pub fn k1() -> f64 {
        0.1
    }
    pub fn k2() -> f64 {
        0.1
    }
    pub fn pi0() -> f64 {
        0.25
    }
    pub fn k_i() -> f64 {
        0.01
    }
    pub fn u0() -> f64 {
        std::f64::consts::LN_2
    }
    pub fn theta0() -> [f64; 3] {
        [0.25, 1.0, 0.1]
    }
    pub fn cov0() -> f64 {
        0.1
    }
    pub fn r() -> f64 {
        0.09
    }
    pub fn q_proc() -> f64 {
        1e-6
    }
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self::vot()
    }
}

impl ControllerSpec {
    pub fn vot() -> Self {
        ControllerSpec::Vot {
            k1: defaults::k1(),
            k2: defaults::k2(),
            alpha_guess: None,
            pi0: defaults::pi0(),
        }
    }

    pub fn integral() -> Self {
        ControllerSpec::Integral {
            k_i: defaults::k_i(),
            u0: defaults::u0(),
            target: None,
        }
    }

    pub fn self_learning() -> Self {
        ControllerSpec::SelfLearning {
            theta0: defaults::theta0(),
            cov0: defaults::cov0(),
            r: defaults::r(),
            q_proc: defaults::q_proc(),
        }
    }

    /// Default-tuned spec for a controller kind name.
    pub fn from_kind(kind: &str) -> Option<Self> {
        match kind {
            "vot" => Some(Self::vot()),
            "integral" => Some(Self::integral()),
            "self_learning" | "selflearning" | "self-learning" => Some(Self::self_learning()),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ControllerSpec::Vot { .. } => "vot",
            ControllerSpec::Integral { .. } => "integral",
            ControllerSpec::SelfLearning { .. } => "self_learning",
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    format!("controller.{key}"),
                    format!("must be positive, got {v}"),
                ))
            }
        }
        fn finite(key: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("controller.{key}"), "must be finite"))
            }
        }
        match *self {
            ControllerSpec::Vot {
                k1,
                k2,
                alpha_guess,
                pi0,
            } => {
                positive("k1", k1)?;
                positive("k2", k2)?;
                if let Some(a) = alpha_guess {
                    positive("alpha_guess", a)?;
                }
                finite("pi0", pi0)
            }
            ControllerSpec::Integral { k_i, u0, target } => {
                positive("k_i", k_i)?;
                finite("u0", u0)?;
                if let Some(t) = target {
                    finite("target", t)?;
                }
                Ok(())
            }
            ControllerSpec::SelfLearning {
                theta0,
                cov0,
                r,
                q_proc,
            } => {
                for (i, v) in theta0.iter().enumerate() {
                    finite(&format!("theta0[{i}]"), *v)?;
                }
                if !(cov0 >= 0.0 && cov0.is_finite()) {
                    return Err(Error::config("controller.cov0", "must be nonnegative"));
                }
                positive("r", r)?;
                if !(q_proc >= 0.0 && q_proc.is_finite()) {
                    return Err(Error::config("controller.q_proc", "must be nonnegative"));
                }
                Ok(())
            }
        }
    }

    /// Instantiates the controller. `true_scale` fills in an omitted scale guess.
    pub fn build(&self, caps: Capacities, true_scale: f64) -> Box<dyn PricingController> {
        match *self {
            ControllerSpec::Vot {
                k1,
                k2,
                alpha_guess,
                pi0,
            } => Box::new(VotController::new(
                VotEstimatorState {
                    pi: pi0,
                    k1,
                    k2,
                    alpha_guess: alpha_guess.unwrap_or(true_scale),
                },
                caps,
            )),
            ControllerSpec::Integral { k_i, u0, target } => {
                Box::new(IntegralTollController::new(IntegralTollState {
                    u: u0,
                    k_i,
                    target_q_hot: target.unwrap_or(caps.hot),
                }))
            }
            ControllerSpec::SelfLearning {
                theta0,
                cov0,
                r,
                q_proc,
            } => Box::new(SelfLearningController::new(
                SelfLearningState::new(theta0, cov0, r, q_proc),
                caps,
            )),
        }
    }
}
