use hotlane_core::analytics::{sweep_gain, Gain};
use hotlane_core::choice::induced_residual_capacity;
use hotlane_core::controller::VotEstimatorState;
use hotlane_core::model::queuing_times;
use hotlane_core::sim::{aggregate, ReplicationSummary};
use hotlane_core::{
    analytic_optimal_price, beta, find_phase_boundary, run_replications, summarize, ApproxScenario,
    ConstantScenarioParams, ControllerSpec, DemandProfile, Error, PatternReport, PhaseModel,
    ScenarioConfig, SummaryMetrics, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::failure::Failure;
use crate::output::{fmt_g, write_csv, write_json, write_trajectory, Sink};
use crate::{ApproxArgs, CompareArgs, Format, ModelKind, SweepArgs};

/// Final HOT queue below which a run counts as queue-free.
const OPTIMAL_QUEUE: f64 = 1e-3;
/// Allowed gap between average HOT throughput and capacity.
const OPTIMAL_THROUGHPUT_GAP: f64 = 0.5;

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    #[serde(flatten)]
    metrics: SummaryMetrics,
}

#[derive(Serialize)]
struct SimulationReport {
    controller: String,
    fingerprint: String,
    replications: usize,
    runs: Vec<RunSummary>,
    aggregate: ReplicationSummary,
}

fn run_all(config: &ScenarioConfig) -> Result<Vec<Trajectory>, Failure> {
    run_replications(config)
        .into_iter()
        .collect::<Result<Vec<_>, Error>>()
        .map_err(Failure::from)
}

fn report(config: &ScenarioConfig, trajs: &[Trajectory]) -> SimulationReport {
    let metrics: Vec<SummaryMetrics> = trajs
        .iter()
        .map(|t| summarize(t, config.behavior.vot))
        .collect();
    SimulationReport {
        controller: config.controller.kind().to_string(),
        fingerprint: config.fingerprint(),
        replications: trajs.len(),
        runs: metrics
            .iter()
            .enumerate()
            .map(|(i, m)| RunSummary {
                seed: config.seed.wrapping_add(i as u64),
                metrics: *m,
            })
            .collect(),
        aggregate: aggregate(&metrics),
    }
}

pub fn simulate(config: &ScenarioConfig, sink: &Sink, format: Format) -> Result<(), Failure> {
    if sink.is_stdout() && format == Format::Csv && config.replications > 1 {
        return Err(Failure::usage(
            "several replications produce several trajectories; pass --out <dir> or --format json",
        ));
    }
    let trajs = run_all(config)?;
    let summary = report(config, &trajs);
    match sink {
        Sink::Stdout => match format {
            Format::Csv => sink.emit("", |w| write_trajectory(w, &trajs[0].states)),
            Format::Json => sink.emit("", |w| write_json(w, &summary)),
        },
        Sink::Dir(_) => {
            for (i, traj) in trajs.iter().enumerate() {
                let name = if trajs.len() == 1 {
                    "trajectory.csv".to_string()
                } else {
                    format!("trajectory_{i:03}.csv")
                };
                sink.emit(&name, |w| write_trajectory(w, &traj.states))?;
            }
            sink.emit("summary.json", |w| write_json(w, &summary))
        }
    }
}

#[derive(Serialize)]
struct ControllerVerdict {
    #[serde(flatten)]
    report: SimulationReport,
    optimal: bool,
}

#[derive(Serialize)]
struct Comparison {
    seed: u64,
    controllers: Vec<ControllerVerdict>,
}

pub fn compare(
    config: &ScenarioConfig,
    args: &CompareArgs,
    sink: &Sink,
    format: Format,
) -> Result<(), Failure> {
    if args.controllers.len() < 2 {
        return Err(Failure::usage("compare needs at least two controllers"));
    }
    let specs = args
        .controllers
        .iter()
        .map(|name| {
            if config.controller.kind() == name.replace('-', "_") {
                return Ok(config.controller.clone());
            }
            ControllerSpec::from_kind(name).ok_or_else(|| {
                Failure::usage(format!(
                    "unknown controller `{name}` (expected vot, integral or self_learning)"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let reports = specs
        .par_iter()
        .map(|spec| {
            let c = config.clone().with_controller(spec.clone());
            run_all(&c).map(|trajs| report(&c, &trajs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let controllers: Vec<ControllerVerdict> = reports
        .into_iter()
        .map(|report| {
            let agg = &report.aggregate;
            let optimal = agg.final_lambda1.mean < OPTIMAL_QUEUE
                && (agg.avg_g1.mean - config.capacity.hot).abs() <= OPTIMAL_THROUGHPUT_GAP;
            ControllerVerdict { report, optimal }
        })
        .collect();
    let comparison = Comparison {
        seed: config.seed,
        controllers,
    };

    match format {
        Format::Json => sink.emit("compare.json", |w| write_json(w, &comparison)),
        Format::Csv => sink.emit("compare.csv", |w| {
            writeln!(
                w,
                "controller,avg_g1,final_u,final_pi,max_lambda1,final_lambda1,pi_rmse_tail,optimal"
            )?;
            for c in &comparison.controllers {
                let a = &c.report.aggregate;
                let nums: Vec<String> = [
                    a.avg_g1.mean,
                    a.final_u.mean,
                    a.final_pi.mean,
                    a.max_lambda1.mean,
                    a.final_lambda1.mean,
                    a.pi_rmse_tail.mean,
                ]
                .iter()
                .map(|&v| fmt_g(v))
                .collect();
                writeln!(
                    w,
                    "{},{},{}",
                    c.report.controller,
                    nums.join(","),
                    c.optimal
                )?;
            }
            Ok(())
        }),
    }
}

fn vot_settings(config: &ScenarioConfig) -> (f64, f64, f64, f64) {
    match config.controller {
        ControllerSpec::Vot {
            k1,
            k2,
            alpha_guess,
            pi0,
        } => (k1, k2, alpha_guess.unwrap_or(config.behavior.scale), pi0),
        _ => {
            let ControllerSpec::Vot { k1, k2, pi0, .. } = ControllerSpec::vot() else {
                unreachable!()
            };
            (k1, k2, config.behavior.scale, pi0)
        }
    }
}

fn constant_params(
    config: &ScenarioConfig,
    command: &str,
) -> Result<ConstantScenarioParams, Failure> {
    if !matches!(config.demand, DemandProfile::Constant { .. }) {
        return Err(Failure::usage(format!(
            "`{command}` needs constant demand (demand.kind = \"constant\")"
        )));
    }
    Ok(ConstantScenarioParams::from_config(config)?)
}

/// Residual capacity induced at `t = 0` by the VOT controller's first quote.
fn initial_residual(
    config: &ScenarioConfig,
    p: &ConstantScenarioParams,
    lambda1: f64,
) -> Result<f64, Failure> {
    let (k1, k2, alpha_guess, pi0) = vot_settings(config);
    let queues = hotlane_core::QueueState {
        hot: lambda1,
        gp: config.initial.gp,
    };
    let w = queuing_times(queues, config.capacity).difference;
    let estimator = VotEstimatorState {
        pi: pi0,
        k1,
        k2,
        alpha_guess,
    };
    let toll = estimator.price(w, p.hov, p.sov, p.hot_capacity)?;
    Ok(induced_residual_capacity(
        p.hot_capacity,
        p.hov,
        p.sov,
        toll,
        w,
        0.0,
        &config.behavior,
    ))
}

fn approx_scenario(
    config: &ScenarioConfig,
    k1: f64,
    k2: f64,
    lambda0: Option<f64>,
    zeta0: Option<f64>,
    command: &str,
) -> Result<ApproxScenario, Failure> {
    let p = constant_params(config, command)?;
    let lambda1 = lambda0.unwrap_or(config.initial.hot);
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return Err(Failure::usage("--lambda0 must be a nonnegative number"));
    }
    let zeta = match zeta0 {
        Some(z) => z,
        None => initial_residual(config, &p, lambda1)?,
    };
    Ok(ApproxScenario {
        k1,
        k2,
        beta: beta(&p),
        lambda1,
        zeta,
        horizon: config.time.horizon,
        dt: config.dt(),
    })
}

#[derive(Serialize)]
struct PriceRow {
    t: f64,
    u: f64,
}

pub fn analytic(config: &ScenarioConfig, sink: &Sink, format: Format) -> Result<(), Failure> {
    let p = constant_params(config, "analytic")?;
    let dt = config.dt().get();
    let rows = (0..=config.steps())
        .map(|k| {
            let t = k as f64 * dt;
            analytic_optimal_price(t, &p).map(|u| PriceRow { t, u })
        })
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        Format::Csv => sink.emit("analytic.csv", |w| {
            write_csv(
                w,
                "t,u",
                rows.iter()
                    .map(|r| [r.t, r.u])
                    .collect::<Vec<_>>()
                    .iter()
                    .map(|r| &r[..]),
            )
        }),
        Format::Json => sink.emit("analytic.json", |w| write_json(w, &rows)),
    }
}

#[derive(Serialize)]
struct ApproxRow {
    t: f64,
    lambda1: f64,
    zeta: f64,
    ratio: f64,
}

pub fn approx(
    config: &ScenarioConfig,
    args: &ApproxArgs,
    sink: &Sink,
    format: Format,
) -> Result<(), Failure> {
    let (k1, k2, ..) = vot_settings(config);
    let scenario = approx_scenario(
        config,
        args.k1.unwrap_or(k1),
        args.k2.unwrap_or(k2),
        args.lambda0,
        args.zeta0,
        "approx",
    )?;
    if !(scenario.k1 > 0.0 && scenario.k2 > 0.0) {
        return Err(Failure::usage("gains must be positive"));
    }
    let rows: Vec<ApproxRow> = scenario
        .run()?
        .into_iter()
        .map(|s| ApproxRow {
            t: s.t,
            lambda1: s.lambda1,
            zeta: s.zeta,
            ratio: if s.zeta == 0.0 {
                f64::NAN
            } else {
                s.lambda1 / s.zeta
            },
        })
        .collect();
    match format {
        Format::Csv => sink.emit("approx.csv", |w| {
            let nums: Vec<[f64; 4]> = rows
                .iter()
                .map(|r| [r.t, r.lambda1, r.zeta, r.ratio])
                .collect();
            write_csv(w, "t,lambda1,zeta,ratio", nums.iter().map(|r| &r[..]))
        }),
        Format::Json => sink.emit("approx.json", |w| write_json(w, &rows)),
    }
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    #[serde(flatten)]
    report: PatternReport,
}

#[derive(Serialize)]
struct SweepOutput {
    gain: Gain,
    fixed: f64,
    rows: Vec<SweepRow>,
    boundary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(Failure::usage(format!(
            "empty grid: --from {from} --to {to} --step {step}"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub fn sweep(
    config: &ScenarioConfig,
    args: &SweepArgs,
    sink: &Sink,
    format: Format,
) -> Result<(), Failure> {
    let (k1, k2, ..) = vot_settings(config);
    let fixed = args.fixed.unwrap_or(match args.gain {
        Gain::K1 => k2,
        Gain::K2 => k1,
    });
    let values = match (args.from, args.to, args.step) {
        (Some(from), Some(to), Some(step)) => grid(from, to, step)?,
        (Some(_), Some(_), None) if args.bisect => Vec::new(),
        _ => {
            return Err(Failure::usage(
                "give --from, --to and --step for a grid, or --from/--to with --bisect",
            ))
        }
    };
    if args.bisect && args.gain != Gain::K2 {
        return Err(Failure::usage("bisection searches over k2; use --gain k2"));
    }

    let model = match args.model {
        ModelKind::ClosedLoop => {
            if !matches!(config.controller, ControllerSpec::Vot { .. }) {
                return Err(Failure::usage(
                    "sweeps need the vot controller in the scenario",
                ));
            }
            PhaseModel::ClosedLoop(config.clone())
        }
        ModelKind::Approximate => PhaseModel::Approximate(approx_scenario(
            config,
            k1,
            k2,
            None,
            args.zeta0,
            "sweep --model approximate",
        )?),
    };
    let tail = args
        .tail_window
        .unwrap_or_else(|| model.default_tail_window());

    let rows: Vec<SweepRow> = sweep_gain(&model, args.gain, &values, fixed, tail)?
        .into_iter()
        .map(|(value, report)| SweepRow { value, report })
        .collect();

    let (mut boundary, mut warning) = (None, None);
    if args.bisect {
        let (lo, hi) = (args.from.expect("checked"), args.to.expect("checked"));
        match find_phase_boundary(&model, fixed, lo, hi, args.resolution, tail) {
            Ok(k2) => boundary = Some(k2),
            Err(e @ Error::NotBracketed { .. }) => {
                eprintln!("warning: {e}");
                warning = Some(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(k2) = boundary {
            eprintln!("phase boundary: k2 = {}", fmt_g(k2));
        }
    }

    let out = SweepOutput {
        gain: args.gain,
        fixed,
        rows,
        boundary,
        warning,
    };
    match format {
        Format::Json => sink.emit("sweep.json", |w| write_json(w, &out)),
        Format::Csv => {
            let name = match out.gain {
                Gain::K1 => "k1",
                Gain::K2 => "k2",
            };
            sink.emit("sweep.csv", |w| {
                writeln!(
                    w,
                    "{name},pattern,ratio_estimate,fit_r2_gaussian,fit_r2_exponential,window_start,window_end"
                )?;
                for row in &out.rows {
                    let r = &row.report;
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        fmt_g(row.value),
                        r.pattern,
                        fmt_g(r.ratio_estimate),
                        fmt_g(r.fit_r2_gaussian),
                        fmt_g(r.fit_r2_exponential),
                        fmt_g(r.window_start),
                        fmt_g(r.window_end)
                    )?;
                }
                Ok(())
            })?;
            if let (Sink::Dir(_), true) = (sink, args.bisect) {
                sink.emit("boundary.json", |w| {
                    write_json(
                        w,
                        &serde_json::json!({ "boundary": out.boundary, "warning": out.warning }),
                    )
                })?;
            }
            Ok(())
        }
    }
}
