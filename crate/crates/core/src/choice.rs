//! Binary logit lane choice for single-occupancy vehicles.
//!
//! An SOV pays to use the HOT lanes with probability
//! `1 / (1 + exp(scale * (toll - (1 + eta) * vot * delay_saving)))`,
//! where `eta` is a multiplicative disturbance on the perceived time value.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// True population behaviour: mean value of time ($/min) and logit scale (1/$).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorParams {
    pub vot: f64,
    pub scale: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            vot: 0.5,
            scale: 1.0,
        }
    }
}

impl BehaviorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.vot > 0.0 && self.vot.is_finite()) {
            return Err(Error::config("behavior.vot", "must be positive"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("behavior.scale", "must be positive"));
        }
        Ok(())
    }
}

/// Distribution of the per-step choice disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    /// `eta ~ Uniform[-half_width, +half_width]`.
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Uniform { half_width } => {
                if (0.0..1.0).contains(&half_width) {
                    Ok(())
                } else {
                    Err(Error::config(
                        "noise.half_width",
                        format!("must lie in [0, 1), got {half_width}"),
                    ))
                }
            }
        }
    }

    /// Draws one disturbance. `None` does not touch the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Uniform { half_width: 0.0 } => 0.0,
            NoiseSpec::Uniform { half_width } => rng.random_range(-half_width..=half_width),
        }
    }
}

/// `1 / (1 + exp(x))` without overflow for large `|x|`.
#[inline]
fn logistic_complement(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Probability that an SOV pays the toll.
///
/// Lies strictly inside (0, 1) as long as the logit exponent stays within
/// roughly ±36 (beyond that `1 - p` is below f64 resolution).
pub fn paying_share(toll: f64, delay_saving: f64, eta: f64, params: &BehaviorParams) -> f64 {
    let exponent = params.scale * (toll - (1.0 + eta) * params.vot * delay_saving);
    logistic_complement(exponent)
}

pub fn paying_demand(
    sov_demand: f64,
    toll: f64,
    delay_saving: f64,
    eta: f64,
    params: &BehaviorParams,
) -> f64 {
    if sov_demand == 0.0 {
        return 0.0;
    }
    sov_demand * paying_share(toll, delay_saving, eta, params)
}

/// Residual HOT capacity that the given toll induces.
pub fn induced_residual_capacity(
    hot_capacity: f64,
    hov_demand: f64,
    sov_demand: f64,
    toll: f64,
    delay_saving: f64,
    eta: f64,
    params: &BehaviorParams,
) -> f64 {
    hot_capacity - hov_demand - paying_demand(sov_demand, toll, delay_saving, eta, params)
}
