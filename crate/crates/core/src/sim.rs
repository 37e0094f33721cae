//! Closed-loop simulation: demand generation, the per-step pricing loop,
//! trajectories and their summary metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::PhasePoint;
use crate::choice::paying_demand;
use crate::config::ScenarioConfig;
use crate::controller::{Feedback, QuoteInput};
use crate::error::{Error, Result};
use crate::model::{queuing_times, residual_capacity, step_point_queues, throughputs, Capacities};

/// Per-run random stream. Demand draws come before the choice disturbance
/// within each step.
pub type RngStream = ChaCha8Rng;

/// Queue level below which the HOT lanes count as empty.
pub const ZERO_QUEUE: f64 = 1e-6;

/// Fraction of the horizon treated as the tail for steady-state metrics.
pub const TAIL_FRACTION: f64 = 0.25;

/// Arrival rates of HOVs and SOVs over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandProfile {
    Constant {
        hov: f64,
        sov: f64,
    },
    /// Rates drawn independently each step as Poisson variates with the
    /// given means (veh/min).
    Poisson {
        hov: f64,
        sov: f64,
    },
    /// Piecewise-constant rates; rows are `[t, hov, sov]` with increasing `t`.
    Timeseries {
        samples: Vec<[f64; 3]>,
    },
}

impl Default for DemandProfile {
    fn default() -> Self {
        DemandProfile::Constant {
            hov: 10.0,
            sov: 60.0,
        }
    }
}

impl DemandProfile {
    pub fn validate(&self, caps: Capacities, horizon: f64) -> Result<()> {
        fn rates(key: &str, hov: f64, sov: f64, caps: Capacities) -> Result<()> {
            if !(hov >= 0.0 && hov.is_finite()) {
                return Err(Error::config(
                    format!("{key}.hov"),
                    "rate must be nonnegative",
                ));
            }
            if !(sov >= 0.0 && sov.is_finite()) {
                return Err(Error::config(
                    format!("{key}.sov"),
                    "rate must be nonnegative",
                ));
            }
            if hov >= caps.hot {
                return Err(Error::Assumption(format!(
                    "{key}: HOV demand {hov} must stay below the HOT capacity {} (q1 < c1)",
                    caps.hot
                )));
            }
            Ok(())
        }
        match self {
            DemandProfile::Constant { hov, sov } | DemandProfile::Poisson { hov, sov } => {
                rates("demand", *hov, *sov, caps)
            }
            DemandProfile::Timeseries { samples } => {
                let Some(first) = samples.first() else {
                    return Err(Error::config(
                        "demand.samples",
                        "timeseries needs at least one row",
                    ));
                };
                if first[0] > 0.0 {
                    return Err(Error::config(
                        "demand.samples",
                        format!(
                            "first sample at t = {} leaves [0, {horizon}] uncovered",
                            first[0]
                        ),
                    ));
                }
                for (i, row) in samples.iter().enumerate() {
                    if !row[0].is_finite() {
                        return Err(Error::config(
                            format!("demand.samples[{i}]"),
                            "time must be finite",
                        ));
                    }
                    if i > 0 && row[0] <= samples[i - 1][0] {
                        return Err(Error::config(
                            format!("demand.samples[{i}]"),
                            "sample times must be strictly increasing",
                        ));
                    }
                    rates(&format!("demand.samples[{i}]"), row[1], row[2], caps)?;
                }
                Ok(())
            }
        }
    }

    /// `(hov, sov)` rates at time `t`.
    pub fn demand_at(&self, t: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
        match self {
            DemandProfile::Constant { hov, sov } => Ok((*hov, *sov)),
            DemandProfile::Poisson { hov, sov } => {
                Ok((poisson_rate(*hov, rng), poisson_rate(*sov, rng)))
            }
            DemandProfile::Timeseries { samples } => {
                let idx = samples.partition_point(|row| row[0] <= t);
                if idx == 0 {
                    return Err(Error::config(
                        "demand.samples",
                        format!("no sample at or before t = {t}"),
                    ));
                }
                let row = samples[idx - 1];
                Ok((row[1], row[2]))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DemandProfile::Constant { .. })
    }
}

fn poisson_rate(mean: f64, rng: &mut RngStream) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng)
}

/// One recorded step of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    /// HOT queue (veh).
    pub lambda1: f64,
    /// GP queue (veh).
    pub lambda2: f64,
    /// HOT residual capacity (veh/min).
    pub zeta: f64,
    /// Queuing-time difference GP minus HOT (min).
    pub w: f64,
    /// Controller's VOT estimate ($/min); NaN for strategies without one.
    pub pi: f64,
    /// Quoted toll ($).
    pub u: f64,
    pub g1: f64,
    pub g2: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub controller: String,
    pub fingerprint: String,
    pub dt: f64,
    pub states: Vec<SystemState>,
}

impl Trajectory {
    pub fn last(&self) -> &SystemState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn horizon(&self) -> f64 {
        self.last().t
    }

    /// States with `t` in the final `fraction` of the horizon.
    pub fn tail(&self, fraction: f64) -> &[SystemState] {
        let start = self.horizon() * (1.0 - fraction);
        let idx = self.states.partition_point(|s| s.t < start - 1e-9);
        &self.states[idx..]
    }

    /// Earliest time after which `pred` holds at every remaining step.
    pub fn settling_time(&self, pred: impl Fn(&SystemState) -> bool) -> Option<f64> {
        let mut first = None;
        for s in self.states.iter().rev() {
            if pred(s) {
                first = Some(s.t);
            } else {
                break;
            }
        }
        first
    }

    pub fn phase_points(&self) -> Vec<PhasePoint> {
        self.states
            .iter()
            .map(|s| PhasePoint {
                t: s.t,
                lambda1: s.lambda1,
                zeta: s.zeta,
            })
            .collect()
    }
}

/// Runs the scenario's controller against the plant for the full horizon.
///
/// Within each step: queuing-time difference, demand, toll quote, choice
/// disturbance, paying demand and residual capacity, throughputs (recorded),
/// queue update, and finally the controller update.
pub fn run_closed_loop(config: &ScenarioConfig) -> Result<Trajectory> {
    config.validate()?;
    let caps = config.capacity;
    let dt = config.dt();
    let steps = config.steps();
    let behavior = config.behavior;
    let mut controller = config.controller.build(caps, behavior.scale);
    let mut rng = RngStream::seed_from_u64(config.seed);
    let mut queues = config.initial;
    let mut toll = 0.0;
    let mut states = Vec::with_capacity(steps + 1);

    for step in 0..=steps {
        let t = step as f64 * dt.get();
        let at_step = |e: Error| Error::AtStep {
            step,
            t,
            source: Box::new(e),
        };

        let delay_saving = queuing_times(queues, caps).difference;
        let (hov, sov) = config.demand.demand_at(t, &mut rng).map_err(at_step)?;
        let pi = controller.vot_estimate().unwrap_or(f64::NAN);
        // With no SOVs on the road the toll has nobody to act on; hold it.
        if sov > 0.0 {
            toll = controller
                .quote(&QuoteInput {
                    t,
                    delay_saving,
                    hov_demand: hov,
                    sov_demand: sov,
                })
                .map_err(at_step)?;
        }
        let eta = config.noise.sample(&mut rng);
        let paying = paying_demand(sov, toll, delay_saving, eta, &behavior);
        let residual = residual_capacity(caps.hot, hov, paying);
        let (g1, g2) = throughputs(queues, residual, hov, sov, caps, dt);

        states.push(SystemState {
            t,
            lambda1: queues.hot,
            lambda2: queues.gp,
            zeta: residual,
            w: delay_saving,
            pi,
            u: toll,
            g1,
            g2,
            q1: hov,
            q2: sov,
            q3: paying,
            eta,
        });
        if step == steps {
            break;
        }

        let hot_queue = queues.hot;
        queues = step_point_queues(queues, residual, hov, sov, caps, dt);
        controller.observe(&Feedback {
            dt,
            toll,
            delay_saving,
            hov_demand: hov,
            sov_demand: sov,
            paying_demand: paying,
            hot_queue,
            residual,
        });
    }

    Ok(Trajectory {
        controller: controller.name().to_string(),
        fingerprint: config.fingerprint(),
        dt: dt.get(),
        states,
    })
}

/// Runs `config.replications` copies with seeds `seed, seed + 1, ...`.
/// Results come back in replication order regardless of scheduling.
pub fn run_replications(config: &ScenarioConfig) -> Vec<Result<Trajectory>> {
    (0..config.replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(i);
            c.replications = 1;
            run_closed_loop(&c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    pub avg_g1: f64,
    pub final_u: f64,
    pub final_pi: f64,
    pub max_lambda1: f64,
    pub final_lambda1: f64,
    /// Start of the final stretch during which the HOT queue stays empty.
    pub time_to_zero_queue: Option<f64>,
    /// RMS deviation of the VOT estimate from the true value over the tail.
    pub pi_rmse_tail: f64,
    /// Steps at which the quoted toll was negative.
    pub negative_price_steps: usize,
}

pub fn summarize(traj: &Trajectory, true_vot: f64) -> SummaryMetrics {
    let states = &traj.states;
    let n = states.len() as f64;
    let last = traj.last();
    let tail = traj.tail(TAIL_FRACTION);
    let pi_rmse_tail =
        (tail.iter().map(|s| (s.pi - true_vot).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
    SummaryMetrics {
        avg_g1: states.iter().map(|s| s.g1).sum::<f64>() / n,
        final_u: last.u,
        final_pi: last.pi,
        max_lambda1: states.iter().map(|s| s.lambda1).fold(0.0, f64::max),
        final_lambda1: last.lambda1,
        time_to_zero_queue: traj.settling_time(|s| s.lambda1 < ZERO_QUEUE),
        pi_rmse_tail,
        negative_price_steps: states.iter().filter(|s| s.u < 0.0).count(),
    }
}

/// Mean and sample standard deviation of a metric across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub replications: usize,
    pub avg_g1: Spread,
    pub final_u: Spread,
    pub final_pi: Spread,
    pub max_lambda1: Spread,
    pub final_lambda1: Spread,
    pub pi_rmse_tail: Spread,
}

pub fn aggregate(summaries: &[SummaryMetrics]) -> ReplicationSummary {
    let field = |f: fn(&SummaryMetrics) -> f64| Spread::of(summaries.iter().map(f));
    ReplicationSummary {
        replications: summaries.len(),
        avg_g1: field(|s| s.avg_g1),
        final_u: field(|s| s.final_u),
        final_pi: field(|s| s.final_pi),
        max_lambda1: field(|s| s.max_lambda1),
        final_lambda1: field(|s| s.final_lambda1),
        pi_rmse_tail: field(|s| s.pi_rmse_tail),
    }
}
