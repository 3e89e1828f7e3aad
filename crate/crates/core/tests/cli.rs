mod common;

use std::path::Path;
use std::process::{Command, Output};

use uav_outage::scenario::save_scenario;

const BIN: &str = env!("CARGO_BIN_EXE_uav-outage");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_scenario(dir: &Path, name: &str, s: &uav_outage::Scenario) -> String {
    let path = dir.join(name);
    save_scenario(s, &path).unwrap();
    path.to_string_lossy().into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn check_reports_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let s4 = write_scenario(dir.path(), "s4.json", &common::s4());

    let o = run(&["check", "--scenario", &s4, "--obar", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "feasible, bottleneck 19.0512 s, path G1→G3→G2");

    let o = run(&["check", "--scenario", &s4, "--obar", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).trim(), "infeasible; minimum feasible budget 19.0512 s");

    let o = run(&["check", "--scenario", &s4, "--obar", "20", "--dump-graph"]);
    assert!(stdout(&o).contains("G1 -- G3"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = run(&["check", "--scenario", bad.to_str().unwrap(), "--obar", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check", "--scenario", "/nonexistent/s.json", "--obar", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check", "--obar", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plan_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = write_scenario(dir.path(), "s1.json", &common::s1());
    let out = dir.path().join("s1_sub");
    let o = run(&["plan", "--scenario", &s1, "--obar", "5", "--method", "suboptimal", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.starts_with("method=suboptimal "));
    assert!((field(&line, "T") - 50.0).abs() < 1e-3);
    assert!((field(&line, "O_T") - 5.0).abs() < 1e-3);
    for f in ["plan.json", "trajectory.csv", "outage.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t_s,x_m,y_m,serving_gbs,snr_dB,in_outage");
    let plan: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["sequence"], serde_json::json!([1, 2]));

    let s2 = write_scenario(dir.path(), "s2.json", &common::s2());
    let o = run(&["plan", "--scenario", &s2, "--obar", "0", "--method", "optimal", "--out", dir.path().join("s2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "method=optimal T=10.0000 O_T=0");

    let s4 = write_scenario(dir.path(), "s4.json", &common::s4());
    let opt = run(&["plan", "--scenario", &s4, "--obar", "20", "--out", dir.path().join("o").to_str().unwrap(), "--dump-graph", "--solver-trace"]);
    assert_eq!(opt.status.code(), Some(0));
    assert!(dir.path().join("o/graph.dot").exists());
    assert!(dir.path().join("o/solver_trace.csv").exists());
    let dp_dir = dir.path().join("dp");
    let dp = run(&["plan", "--scenario", &s4, "--obar", "20", "--method", "dp", "--delta", "10", "--nr", "300", "--out", dp_dir.to_str().unwrap()]);
    assert_eq!(dp.status.code(), Some(0));
    assert!(field(&stdout(&dp), "T") >= field(&stdout(&opt), "T"));
    assert!(dp_dir.join("trajectory.csv").exists());

    let o = run(&["plan", "--scenario", &s4, "--obar", "10", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["plan", "--scenario", &s4, "--obar", "10", "--method", "warp", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let s4 = write_scenario(dir.path(), "s4.json", &common::s4());
    let out = dir.path().join("sweep.csv");
    let o = run(&["sweep", "--scenario", &s4, "--range", "19.1", "60", "5", "--methods", "optimal,suboptimal,straight", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["obar_s", "method", "T_s", "OT_s", "wall_s", "status"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 15);
    for method in ["optimal", "suboptimal", "straight"] {
        let t: Vec<f64> = rows.iter().filter(|r| &r[1] == method).map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(t.len(), 5);
        assert!(t.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)), "{method}: {t:?}");
        if method == "straight" {
            assert!(t.iter().all(|&x| x == t[0]));
        }
    }

    let o = run(&["sweep", "--scenario", &s4, "--obar-values", "5,30", "--methods", "optimal", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("5,optimal,") && first.ends_with(",infeasible"), "{first}");

    let o = run(&["sweep", "--scenario", &s4, "--obar-values", "30,5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let make = |tag: &str| {
        let scen = dir.path().join(format!("gen_{tag}.json"));
        let o = run(&["gen", "--m", "7", "--box", "10000", "--seed", "11", "--out", scen.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let sweep = dir.path().join(format!("sweep_{tag}.csv"));
        let o = run(&[
            "sweep", "--scenario", scen.to_str().unwrap(), "--range", "80", "150", "3",
            "--methods", "optimal,suboptimal,dp", "--delta", "500", "--out", sweep.to_str().unwrap(), "--no-wall-time",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let plan_dir = dir.path().join(format!("plan_{tag}"));
        let o = run(&["plan", "--scenario", scen.to_str().unwrap(), "--obar", "120", "--out", plan_dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        [
            std::fs::read(scen).unwrap(),
            std::fs::read(sweep).unwrap(),
            std::fs::read(plan_dir.join("plan.json")).unwrap(),
            std::fs::read(plan_dir.join("trajectory.csv")).unwrap(),
            std::fs::read(plan_dir.join("outage.json")).unwrap(),
        ]
    };
    assert_eq!(make("a"), make("b"));

    let sweep = std::fs::read_to_string(dir.path().join("sweep_a.csv")).unwrap();
    let mut t = std::collections::HashMap::<String, Vec<f64>>::new();
    for line in sweep.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[5] != "infeasible" {
            t.entry(f[0].to_string()).or_default().push(f[2].parse().unwrap());
        }
    }
    for row in t.values() {
        // optimal first, then suboptimal and dp, each no better than optimal.
        assert!(row.iter().skip(1).all(|&x| x >= row[0] * (1.0 - 1e-6)), "{row:?}");
    }
}

#[test]
fn audit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = write_scenario(dir.path(), "s1.json", &common::s1());
    let out = dir.path().join("p");
    run(&["plan", "--scenario", &s1, "--obar", "5", "--method", "straight", "--out", out.to_str().unwrap()]);
    let traj = out.join("trajectory.csv");
    let o = run(&["audit", "--scenario", &s1, "--trajectory", traj.to_str().unwrap(), "--obar", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((field(&stdout(&o), "O_T") - 5.0).abs() < 1e-6);
    let o = run(&["audit", "--scenario", &s1, "--trajectory", traj.to_str().unwrap(), "--obar", "4"]);
    assert_eq!(o.status.code(), Some(3));
}
