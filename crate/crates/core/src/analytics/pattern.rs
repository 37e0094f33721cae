use std::fmt;

use serde::{Deserialize, Serialize};

/// Values at or below this magnitude are treated as already converged.
pub const NUMERICAL_FLOOR: f64 = 1e-9;

/// Allowed relative gap between the observed `lambda1 / zeta` and `k2 / k1`
/// for the queued pattern.
const RATIO_TOLERANCE: f64 = 0.10;

const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub lambda1: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergencePattern {
    /// Queue empty, residual capacity decaying like `exp(-c t^2)`.
    Gaussian,
    /// Queue and residual capacity decaying together like `exp(-c t)`.
    Exponential,
    Undetermined,
}

impl fmt::Display for ConvergencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergencePattern::Gaussian => "gaussian",
            ConvergencePattern::Exponential => "exponential",
            ConvergencePattern::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub pattern: ConvergencePattern,
    /// Mean `lambda1 / zeta` over the window (0 when the queue is empty).
    pub ratio_estimate: f64,
    /// R² of `ln zeta` against `t²`.
    pub fit_r2_gaussian: f64,
    /// R² of `ln lambda1` (or `ln zeta` without a queue) against `t`.
    pub fit_r2_exponential: f64,
    /// Window actually examined.
    pub window_start: f64,
    pub window_end: f64,
}

impl PatternReport {
    fn undetermined() -> Self {
        Self {
            pattern: ConvergencePattern::Undetermined,
            ratio_estimate: f64::NAN,
            fit_r2_gaussian: 0.0,
            fit_r2_exponential: 0.0,
            window_start: f64::NAN,
            window_end: f64::NAN,
        }
    }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < MIN_FIT_POINTS {
        return 0.0;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
}

/// Decides how a trajectory settles onto `(lambda1, zeta) = (0, 0)`.
///
/// The examined window is the last `tail_window` minutes before both signals
/// drop under [`NUMERICAL_FLOOR`]; samples past that point carry only
/// round-off. If the queue is empty at the end of that span, the window is
/// further limited to the final queue-free stretch. Gaussian requires an empty queue with positive residual
/// capacity throughout the window, exponential a standing queue whose ratio
/// to the residual capacity is within 10% of `expected_ratio` (`k2 / k1`).
/// The chosen shape must also fit at least as well as the other one.
pub fn classify_pattern(
    points: &[PhasePoint],
    tail_window: f64,
    expected_ratio: f64,
) -> PatternReport {
    let active = |p: &PhasePoint| p.lambda1 > NUMERICAL_FLOOR || p.zeta.abs() > NUMERICAL_FLOOR;
    let Some(end) = points.iter().rposition(active) else {
        return PatternReport::undetermined();
    };
    let t_end = points[end].t;
    let mut start = points[..=end].partition_point(|p| p.t < t_end - tail_window - 1e-12);
    if points[end].lambda1 <= NUMERICAL_FLOOR {
        if let Some(last_queued) = points[..=end]
            .iter()
            .rposition(|p| p.lambda1 > NUMERICAL_FLOOR)
        {
            start = start.max(last_queued + 1);
        }
    }
    let window = &points[start..=end];
    if window.len() < MIN_FIT_POINTS {
        return PatternReport::undetermined();
    }

    let t: Vec<f64> = window.iter().map(|p| p.t).collect();
    let t2: Vec<f64> = t.iter().map(|x| x * x).collect();
    let queue_free = window.iter().all(|p| p.lambda1 <= NUMERICAL_FLOOR);
    let queued = window.iter().all(|p| p.lambda1 > NUMERICAL_FLOOR);
    let zeta_positive = window.iter().all(|p| p.zeta > 0.0);

    let ln_zeta: Vec<f64> = window
        .iter()
        .map(|p| p.zeta.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fit_r2_gaussian = if zeta_positive {
        r_squared(&t2, &ln_zeta)
    } else {
        0.0
    };
    let fit_r2_exponential = if queued {
        let ln_queue: Vec<f64> = window.iter().map(|p| p.lambda1.ln()).collect();
        r_squared(&t, &ln_queue)
    } else if zeta_positive {
        r_squared(&t, &ln_zeta)
    } else {
        0.0
    };
    let ratio_estimate = if queued && zeta_positive {
        window.iter().map(|p| p.lambda1 / p.zeta).sum::<f64>() / window.len() as f64
    } else if queue_free {
        0.0
    } else {
        f64::NAN
    };

    let pattern = if queue_free
        && zeta_positive
        && fit_r2_gaussian > 0.0
        && fit_r2_gaussian >= fit_r2_exponential
    {
        ConvergencePattern::Gaussian
    } else if queued
        && zeta_positive
        && ((ratio_estimate - expected_ratio) / expected_ratio).abs() <= RATIO_TOLERANCE
        && fit_r2_exponential > 0.0
        && fit_r2_exponential >= fit_r2_gaussian
    {
        ConvergencePattern::Exponential
    } else {
        ConvergencePattern::Undetermined
    };

    PatternReport {
        pattern,
        ratio_estimate,
        fit_r2_gaussian,
        fit_r2_exponential,
        window_start: window[0].t,
        window_end: t_end,
    }
}
