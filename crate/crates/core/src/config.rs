//! Scenario files.
//!
//! Scenarios are TOML documents with one table per concern. Every key is
//! optional; omitted keys fall back to the reference setup (one HOT and one
//! GP lane of 30 veh/min, 20 minute horizon at 1/60 minute steps, constant
//! demand of 10 HOV and 60 SOV veh/min, VOT 0.5 $/min, logit scale 1, VOT
//! controller with `k1 = k2 = 0.1` starting from 0.25 $/min).
//!
//! ```toml
//! seed = 42
//! replications = 1
//!
//! [capacity]
//! hot = 30.0
//! gp = 30.0
//!
//! [time]
//! horizon = 20.0
//! steps_per_minute = 60     # or: dt = 0.0166...
//!
//! [demand]
//! kind = "constant"         # "poisson" | "timeseries"
//! hov = 10.0
//! sov = 60.0
//! # samples = [[0.0, 10.0, 60.0], [5.0, 12.0, 58.0]]   (timeseries only)
//!
//! [behavior]
//! vot = 0.5
//! scale = 1.0
//!
//! [noise]
//! kind = "none"             # "uniform" with half_width = 0.1
//!
//! [controller]
//! kind = "vot"              # "integral" | "self_learning"
//! k1 = 0.1
//! k2 = 0.1
//! pi0 = 0.25
//! # alpha_guess = 1.2
//!
//! [initial]
//! hot = 0.0
//! gp = 0.0
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::choice::{BehaviorParams, NoiseSpec};
use crate::controller::ControllerSpec;
use crate::error::{Error, Result};
use crate::model::{Capacities, QueueState, StepSize};
use crate::sim::DemandProfile;

/// Relative slack allowed when checking that the step divides the horizon.
const DIVISIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    /// Simulated horizon in minutes.
    pub horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_minute: Option<u32>,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            dt: None,
            steps_per_minute: None,
        }
    }
}

impl TimeSpec {
    pub fn step(&self) -> Result<StepSize> {
        match (self.dt, self.steps_per_minute) {
            (Some(_), Some(_)) => Err(Error::config(
                "time.dt",
                "give either `dt` or `steps_per_minute`, not both",
            )),
            (Some(dt), None) => StepSize::new(dt),
            (None, Some(0)) => Err(Error::config("time.steps_per_minute", "must be positive")),
            (None, Some(n)) => StepSize::new(1.0 / f64::from(n)),
            (None, None) => StepSize::new(1.0 / 60.0),
        }
    }

    /// Number of steps `horizon / dt`; the trajectory holds one more state.
    pub fn steps(&self) -> Result<usize> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("time.horizon", "must be positive"));
        }
        let dt = self.step()?.get();
        let ratio = self.horizon / dt;
        let n = ratio.round();
        if (ratio - n).abs() > DIVISIBILITY_TOL * ratio.max(1.0) || n < 1.0 {
            return Err(Error::config(
                "time.dt",
                format!(
                    "step {dt} does not divide the horizon {} evenly",
                    self.horizon
                ),
            ));
        }
        Ok(n as usize)
    }
}

/// A complete, validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub replications: usize,
    pub capacity: Capacities,
    pub time: TimeSpec,
    pub demand: DemandProfile,
    pub behavior: BehaviorParams,
    pub noise: NoiseSpec,
    pub controller: ControllerSpec,
    pub initial: QueueState,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            replications: 1,
            capacity: Capacities::default(),
            time: TimeSpec::default(),
            demand: DemandProfile::default(),
            behavior: BehaviorParams::default(),
            noise: NoiseSpec::default(),
            controller: ControllerSpec::default(),
            initial: QueueState::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn with_controller(mut self, controller: ControllerSpec) -> Self {
        self.controller = controller;
        self
    }

    pub fn dt(&self) -> StepSize {
        self.time.step().expect("validated config")
    }

    pub fn steps(&self) -> usize {
        self.time.steps().expect("validated config")
    }

    /// Checks every invariant, reporting the offending key.
    pub fn validate(&self) -> Result<()> {
        Capacities::new(self.capacity.hot, self.capacity.gp)?;
        self.time.steps()?;
        self.demand.validate(self.capacity, self.time.horizon)?;
        self.behavior.validate()?;
        self.noise.validate()?;
        self.controller.validate()?;
        if !(self.initial.hot >= 0.0 && self.initial.hot.is_finite()) {
            return Err(Error::config("initial.hot", "queue must be nonnegative"));
        }
        if !(self.initial.gp >= 0.0 && self.initial.gp.is_finite()) {
            return Err(Error::config("initial.gp", "queue must be nonnegative"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        Ok(())
    }

    /// Short stable digest of the full configuration, seed included.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a scenario from TOML text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| Error::config("<document>", e.message().to_string()))?;
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(
            if path == "." {
                "<document>".into()
            } else {
                path
            },
            e.into_inner().message().to_string(),
        )
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_config(&text)
}
