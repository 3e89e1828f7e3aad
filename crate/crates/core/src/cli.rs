//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 input error, 3 infeasible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::dp::{plan_dp, DpConfig};
use crate::error::{Error, Result};
use crate::gen::generate_params;
use crate::graph::{build_graph, feasible_path, min_feasible_outage, DEFAULT_BISECTION_TOL_S};
use crate::planner::{plan_optimal, plan_straight, plan_suboptimal, Method, Plan, PlanStatus, PlannerConfig};
use crate::scenario::{load_scenario, save_scenario, Scenario};
use crate::solver::{solve_waypoints, write_trace_csv, SolverSettings};
use crate::trajectory::{audit_outage, read_trajectory_csv, snr_trace, write_trajectory_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub const SWEEP_CSV_HEADER: [&str; 6] = ["obar_s", "method", "T_s", "OT_s", "wall_s", "status"];

#[derive(Debug, Parser)]
#[command(name = "uav-outage", version, about = "Minimum-time UAV trajectories under an outage-duration budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test feasibility of a budget and report the minimum feasible budget.
    Check(CheckArgs),
    /// Plan one trajectory and write plan, trajectory and outage files.
    Plan(PlanArgs),
    /// Plan over a range of budgets and write one CSV row per budget and method.
    Sweep(SweepArgs),
    /// Write a random scenario with GBSs uniform in a square.
    Gen(GenArgs),
    /// Audit a trajectory CSV against a scenario.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub obar: f64,
    /// Print the connectivity graph in DOT format.
    #[arg(long)]
    pub dump_graph: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// DP grid granularity in meters.
    #[arg(long, default_value_t = 200.0)]
    pub delta: f64,
    /// DP move-window half-extent in meters.
    #[arg(long, default_value_t = 1000.0)]
    pub nr: f64,
    /// Cap on enumerated handover paths for the optimal planner.
    #[arg(long, default_value_t = 100_000)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub obar: f64,
    #[arg(long, default_value = "optimal")]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Sampling step of the trajectory CSV in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Also write the connectivity graph as graph.dot.
    #[arg(long)]
    pub dump_graph: bool,
    /// Also write the waypoint solver's convergence trace.
    #[arg(long)]
    pub solver_trace: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Explicit budgets, strictly increasing.
    #[arg(long, value_delimiter = ',', conflicts_with = "range")]
    pub obar_values: Vec<f64>,
    /// Linear range MIN MAX COUNT.
    #[arg(long, num_args = 3, value_names = ["MIN", "MAX", "COUNT"])]
    pub range: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', default_value = "optimal,suboptimal,straight")]
    pub methods: Vec<Method>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write 0 in the wall_s column so reruns are byte-identical.
    #[arg(long)]
    pub no_wall_time: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 7)]
    pub m: usize,
    /// Side length of the square region in meters.
    #[arg(long = "box", default_value_t = 10_000.0)]
    pub box_m: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output scenario path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Budget to test the audited outage against.
    #[arg(long)]
    pub obar: Option<f64>,
    /// Output outage report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } | Error::DpInfeasible { .. } => EXIT_INFEASIBLE,
        Error::NonConvergence { .. } => EXIT_INTERNAL,
        Error::Io { .. }
        | Error::Parse(_)
        | Error::Validation(_)
        | Error::Domain(_)
        | Error::Sequence(_)
        | Error::Degenerate(_)
        | Error::Argument(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_INPUT,
    }
}

/// Runs a parsed command, writing the human-readable report to `out`.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<i32> {
    match cli.command {
        Command::Check(a) => check(a, out),
        Command::Plan(a) => plan(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Gen(a) => gen(a, out),
        Command::Audit(a) => audit(a, out),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn budget(obar: f64) -> Result<f64> {
    if obar.is_finite() && obar >= 0.0 {
        Ok(obar)
    } else {
        Err(Error::Argument(format!("outage budget must be non-negative, got {obar}")))
    }
}

fn check<W: Write>(a: CheckArgs, out: &mut W) -> Result<i32> {
    let s = load_scenario(&a.scenario)?;
    let obar = budget(a.obar)?;
    let g = build_graph(&s, obar);
    let min = min_feasible_outage(&s, DEFAULT_BISECTION_TOL_S);
    let w = io_err(Path::new("stdout"));
    let code = match feasible_path(&g) {
        Some(path) => {
            writeln!(out, "feasible, bottleneck {} s, path {path}", sig6(min)).map_err(w)?;
            EXIT_OK
        }
        None => {
            writeln!(out, "infeasible; minimum feasible budget {} s", sig6(min)).map_err(w)?;
            EXIT_INFEASIBLE
        }
    };
    if a.dump_graph {
        write!(out, "{}", g.to_dot()).map_err(io_err(Path::new("stdout")))?;
    }
    Ok(code)
}

fn planner_config(grid: &GridArgs) -> Result<PlannerConfig> {
    if grid.cap == 0 {
        return Err(Error::Argument("path cap must be positive".into()));
    }
    Ok(PlannerConfig {
        solver: SolverSettings::default(),
        path_cap: grid.cap,
    })
}

fn run_method(s: &Scenario, method: Method, obar: f64, grid: &GridArgs) -> Result<Plan> {
    let cfg = planner_config(grid)?;
    match method {
        Method::Optimal => plan_optimal(s, obar, &cfg),
        Method::Suboptimal => plan_suboptimal(s, obar, &cfg),
        Method::Straight => Ok(plan_straight(s)),
        Method::Dp => plan_dp(s, &DpConfig::new(grid.delta, grid.nr, obar)),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn plan<W: Write>(a: PlanArgs, out: &mut W) -> Result<i32> {
    let s = load_scenario(&a.scenario)?;
    let obar = budget(a.obar)?;
    if !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(Error::Argument(format!("sampling step must be positive, got {}", a.dt)));
    }
    let plan = match run_method(&s, a.method, obar, &a.grid) {
        Ok(p) => p,
        Err(e) if exit_code(&e) == EXIT_INFEASIBLE => {
            writeln!(out, "{e}").map_err(io_err(Path::new("stdout")))?;
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e),
    };
    if let PlanStatus::BestFound { enumerated, cap } = plan.status {
        eprintln!("warning: path enumeration stopped at the cap ({enumerated} of at most {cap}); plan is best found, not certified optimal");
    }
    if plan.unconverged_solves > 0 {
        eprintln!(
            "warning: {} waypoint solve(s) stopped before reaching the tolerance",
            plan.unconverged_solves
        );
    }

    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    write_json(&a.out.join("plan.json"), &plan)?;
    let traj = plan.trajectory(&s);
    let samples = snr_trace(&traj, &s, a.dt);
    let csv_path = a.out.join("trajectory.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_trajectory_csv(file, &samples)?;
    audit_outage(&traj, &s).write_json(a.out.join("outage.json"))?;
    if a.dump_graph {
        let path = a.out.join("graph.dot");
        fs::write(&path, build_graph(&s, obar).to_dot()).map_err(io_err(&path))?;
    }
    if a.solver_trace {
        if let Some(seq) = &plan.sequence {
            let settings = SolverSettings {
                trace: true,
                ..SolverSettings::default()
            };
            let trace = match solve_waypoints(seq, &s, obar, &settings) {
                Ok(r) => r.trace,
                Err(Error::NonConvergence { best, .. }) => best.trace,
                Err(e) => return Err(e),
            };
            let path = a.out.join("solver_trace.csv");
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_trace_csv(file, &trace)?;
        }
    }
    writeln!(
        out,
        "method={} T={} O_T={}",
        plan.method.name(),
        sig6(plan.completion_time_s),
        sig6(plan.max_outage_s)
    )
    .map_err(io_err(Path::new("stdout")))?;
    Ok(EXIT_OK)
}

fn sweep_values(a: &SweepArgs) -> Result<Vec<f64>> {
    let values = match &a.range {
        Some(r) => {
            let num = |k: usize| {
                r[k].parse::<f64>()
                    .map_err(|_| Error::Argument(format!("bad range value {:?}", r[k])))
            };
            let (lo, hi) = (num(0)?, num(1)?);
            let count: usize = r[2]
                .parse()
                .map_err(|_| Error::Argument(format!("bad range count {:?}", r[2])))?;
            match count {
                0 => Vec::new(),
                1 => vec![lo],
                _ => (0..count)
                    .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                    .collect(),
            }
        }
        None => a.obar_values.clone(),
    };
    if values.is_empty() {
        return Err(Error::Argument("no budgets given; use --obar-values or --range".into()));
    }
    for v in &values {
        budget(*v)?;
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("budgets must be strictly increasing".into()));
    }
    Ok(values)
}

fn sweep<W: Write>(a: SweepArgs, out: &mut W) -> Result<i32> {
    let s = load_scenario(&a.scenario)?;
    let values = sweep_values(&a)?;
    planner_config(&a.grid)?;
    let mut writer = csv::Writer::from_path(&a.out)?;
    writer.write_record(SWEEP_CSV_HEADER)?;
    let mut rows = 0;
    for &obar in &values {
        for &method in &a.methods {
            let start = Instant::now();
            let result = run_method(&s, method, obar, &a.grid);
            let wall = if a.no_wall_time {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            };
            let (t, ot, status) = match result {
                Ok(p) => {
                    let status = match p.status {
                        PlanStatus::Complete => "ok",
                        PlanStatus::BestFound { .. } => "best_found",
                    };
                    (p.completion_time_s.to_string(), p.max_outage_s.to_string(), status)
                }
                Err(e) if exit_code(&e) == EXIT_INFEASIBLE => (String::new(), String::new(), "infeasible"),
                Err(e) => return Err(e),
            };
            writer.write_record([obar.to_string(), method.name().to_string(), t, ot, wall.to_string(), status.to_string()])?;
            rows += 1;
        }
    }
    writer.flush().map_err(io_err(&a.out))?;
    writeln!(out, "wrote {rows} rows to {}", a.out.display()).map_err(io_err(Path::new("stdout")))?;
    Ok(EXIT_OK)
}

fn gen<W: Write>(a: GenArgs, out: &mut W) -> Result<i32> {
    let params = generate_params(a.m, a.box_m, a.seed)?;
    let s = Scenario::new(params)?;
    match &a.out {
        Some(path) => save_scenario(&s, path)?,
        None => writeln!(out, "{}", s.to_json()?).map_err(io_err(Path::new("stdout")))?,
    }
    Ok(EXIT_OK)
}

fn audit<W: Write>(a: AuditArgs, out: &mut W) -> Result<i32> {
    let s = load_scenario(&a.scenario)?;
    let traj = read_trajectory_csv(&a.trajectory, s.v_max())?;
    let report = audit_outage(&traj, &s);
    if let Some(path) = &a.out {
        report.write_json(path)?;
    }
    let w = io_err(Path::new("stdout"));
    write!(
        out,
        "T={} O_T={} total_outage={}",
        sig6(traj.duration()),
        sig6(report.max_outage_s),
        sig6(report.total_outage_s)
    )
    .map_err(w)?;
    let code = match a.obar {
        Some(obar) => {
            let obar = budget(obar)?;
            let ok = report.max_outage_s <= obar + SolverSettings::default().feas_tol_m / s.v_max();
            write!(out, " budget={}", if ok { "met" } else { "exceeded" }).map_err(io_err(Path::new("stdout")))?;
            if ok {
                EXIT_OK
            } else {
                EXIT_INFEASIBLE
            }
        }
        None => EXIT_OK,
    };
    writeln!(out).map_err(io_err(Path::new("stdout")))?;
    Ok(code)
}
