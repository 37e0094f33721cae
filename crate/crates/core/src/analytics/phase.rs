use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::controller::ControllerSpec;
use crate::error::{Error, Result};
use crate::sim::{run_closed_loop, TAIL_FRACTION};

use super::{classify_pattern, ApproxScenario, ConvergencePattern, PatternReport, PhasePoint};

/// Which estimator gain a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    K1,
    K2,
}

/// A model that can be re-run at arbitrary estimator gains.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseModel {
    /// Full closed loop with the VOT controller.
    ClosedLoop(ScenarioConfig),
    /// Reduced queue/residual-capacity system.
    Approximate(ApproxScenario),
}

impl PhaseModel {
    pub fn horizon(&self) -> f64 {
        match self {
            PhaseModel::ClosedLoop(c) => c.time.horizon,
            PhaseModel::Approximate(a) => a.horizon,
        }
    }

    /// Default classification window: the final quarter of the horizon.
    pub fn default_tail_window(&self) -> f64 {
        TAIL_FRACTION * self.horizon()
    }

    pub fn trajectory(&self, k1: f64, k2: f64) -> Result<Vec<PhasePoint>> {
        match self {
            PhaseModel::ClosedLoop(config) => {
                let ControllerSpec::Vot {
                    alpha_guess, pi0, ..
                } = config.controller
                else {
                    return Err(Error::config(
                        "controller.kind",
                        "gain sweeps need the `vot` controller",
                    ));
                };
                let c = config.clone().with_controller(ControllerSpec::Vot {
                    k1,
                    k2,
                    alpha_guess,
                    pi0,
                });
                Ok(run_closed_loop(&c)?.phase_points())
            }
            PhaseModel::Approximate(a) => {
                let a = ApproxScenario { k1, k2, ..*a };
                Ok(a.run()?.iter().map(PhasePoint::from).collect())
            }
        }
    }

    pub fn classify(&self, k1: f64, k2: f64, tail_window: f64) -> Result<PatternReport> {
        let points = self.trajectory(k1, k2)?;
        Ok(classify_pattern(&points, tail_window, k2 / k1))
    }
}

/// Classifies the model at each value of one gain, the other held fixed.
/// Runs in parallel; results keep the order of `values`.
pub fn sweep_gain(
    model: &PhaseModel,
    gain: Gain,
    values: &[f64],
    fixed: f64,
    tail_window: f64,
) -> Result<Vec<(f64, PatternReport)>> {
    values
        .par_iter()
        .map(|&v| {
            let (k1, k2) = match gain {
                Gain::K1 => (v, fixed),
                Gain::K2 => (fixed, v),
            };
            model.classify(k1, k2, tail_window).map(|r| (v, r))
        })
        .collect()
}

/// Bisects on `k2` for the switch between convergence patterns at fixed `k1`.
///
/// The bracket shrinks until its width is at most `resolution`; the midpoint
/// of the final bracket is returned.
pub fn find_phase_boundary(
    model: &PhaseModel,
    k1: f64,
    k2_low: f64,
    k2_high: f64,
    resolution: f64,
    tail_window: f64,
) -> Result<f64> {
    if !(resolution > 0.0) || !(k2_low < k2_high) {
        return Err(Error::config(
            "sweep",
            "need k2_low < k2_high and a positive resolution",
        ));
    }
    let low_pattern = model.classify(k1, k2_low, tail_window)?.pattern;
    let high_pattern = model.classify(k1, k2_high, tail_window)?.pattern;
    if low_pattern == high_pattern {
        return Err(Error::NotBracketed {
            low: k2_low,
            high: k2_high,
            pattern: low_pattern.to_string(),
        });
    }
    let (mut lo, mut hi) = (k2_low, k2_high);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        let pattern: ConvergencePattern = model.classify(k1, mid, tail_window)?.pattern;
        if pattern == low_pattern {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
