use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "t,lambda1,lambda2,zeta,w,pi,u,g1,g2,q1,q2,q3,eta";

fn hotlane(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hotlane"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_writes_reference_trajectory() {
    let csv = stdout(&hotlane(&["simulate"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 1201);
    assert!(csv.ends_with('\n'));
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 20.0);
    assert!((last[6] - 4.024).abs() < 0.05);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "noisy.toml",
        "seed = 3\n[demand]\nkind = \"poisson\"\nhov = 10.0\nsov = 60.0\n[noise]\nkind = \"uniform\"\nhalf_width = 0.1\n",
    );
    let a = hotlane(&["simulate", "--config", &config]);
    let b = hotlane(&["simulate", "--config", &config]);
    assert_eq!(stdout(&a), stdout(&b));
    let c = hotlane(&["simulate", "--config", &config, "--seed", "4"]);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn csv_reparses_to_core_trajectory() {
    let csv = stdout(&hotlane(&["simulate"]));
    let traj = hotlane_core::run_closed_loop(&hotlane_core::ScenarioConfig::default()).unwrap();
    for (line, s) in csv.lines().skip(1).zip(&traj.states) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let want = [
            s.t, s.lambda1, s.lambda2, s.zeta, s.w, s.pi, s.u, s.g1, s.g2, s.q1, s.q2, s.q3, s.eta,
        ];
        for (got, want) in v.iter().zip(want) {
            assert!(
                (got - want).abs() <= 1e-8 * want.abs().max(1e-300),
                "{line}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn out_dir_holds_trajectories_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = hotlane(&[
        "simulate",
        "--replications",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(out.join("trajectory_000.csv").exists());
    assert!(out.join("trajectory_001.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 2);
    assert_eq!(summary["runs"][1]["seed"], 1);
    assert!(summary["aggregate"]["avg_g1"]["mean"].as_f64().unwrap() > 29.9);
}

#[test]
fn compare_marks_only_vot_optimal() {
    let json = stdout(&hotlane(&["compare", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let verdicts: Vec<(String, bool)> = v["controllers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["controller"].as_str().unwrap().to_string(),
                c["optimal"].as_bool().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        verdicts,
        vec![
            ("vot".to_string(), true),
            ("integral".to_string(), false),
            ("self_learning".to_string(), false)
        ]
    );

    let twice = stdout(&hotlane(&[
        "compare",
        "--controllers",
        "integral,integral",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&twice).unwrap();
    assert_eq!(v["controllers"][0]["runs"], v["controllers"][1]["runs"]);
}

#[test]
fn analytic_and_approx_tables() {
    let csv = stdout(&hotlane(&["analytic"]));
    assert!(csv.starts_with("t,u\n0,0.693147181\n"));
    let last: f64 = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((last - 4.0265).abs() < 1e-3);

    let csv = stdout(&hotlane(&["approx", "--lambda0", "1", "--zeta0", "0.11"]));
    assert!(csv.starts_with("t,lambda1,zeta,ratio\n"));
    let max_zeta = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((max_zeta - 0.44).abs() < 0.03, "{max_zeta}");
}

#[test]
fn sweep_reports_patterns_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "queue.toml", "[initial]\nhot = 1.0\n");
    let out = hotlane(&[
        "sweep",
        "--config",
        &config,
        "--model",
        "approximate",
        "--zeta0",
        "0.11",
        "--from",
        "0.1",
        "--to",
        "0.2",
        "--step",
        "0.05",
        "--bisect",
    ]);
    let csv = stdout(&out);
    let patterns: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(patterns, ["gaussian", "exponential", "exponential"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("phase boundary: k2 = 0.14"));

    // same pattern at both ends is a warning only
    let out = hotlane(&[
        "sweep",
        "--config",
        &config,
        "--model",
        "approximate",
        "--zeta0",
        "0.11",
        "--from",
        "0.05",
        "--to",
        "0.09",
        "--bisect",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn exit_codes_partition_failures() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| hotlane(args).status.code().unwrap();

    assert_eq!(code(&["compare", "--controllers", "vot"]), 2);
    assert_eq!(
        code(&["sweep", "--from", "0.2", "--to", "0.1", "--step", "0.01"]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);
    let poisson = write_config(
        dir.path(),
        "p.toml",
        "[demand]\nkind = \"poisson\"\nhov = 10.0\nsov = 60.0\n",
    );
    assert_eq!(code(&["analytic", "--config", &poisson]), 2);

    let bad = write_config(dir.path(), "bad.toml", "[time]\ndt = 0.0\n");
    assert_eq!(code(&["simulate", "--config", &bad]), 3);
    let unknown = write_config(
        dir.path(),
        "unknown.toml",
        "[controller]\nkind = \"vot\"\nk3 = 1.0\n",
    );
    let out = hotlane(&["simulate", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("controller"));

    let saturated = write_config(
        dir.path(),
        "sat.toml",
        "[demand]\nkind = \"constant\"\nhov = 30.0\nsov = 60.0\n",
    );
    assert_eq!(code(&["simulate", "--config", &saturated]), 4);

    let undefined = write_config(
        dir.path(),
        "a2.toml",
        "[controller]\nkind = \"self_learning\"\ntheta0 = [0.25, 0.0, 0.1]\n",
    );
    let out = hotlane(&["simulate", "--config", &undefined]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("price undefined"));

    let missing = dir.path().join("nope.toml");
    assert_eq!(
        code(&["simulate", "--config", missing.to_str().unwrap()]),
        6
    );
}
