//! Trajectory design methods: exact (all handover paths), suboptimal
//! (shortest surrogate path), and straight flight.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_outage_gaps_m, AssociationSequence, WaypointPlan};
use crate::graph::{build_graph, enumerate_paths_capped, is_feasible, shortest_weighted_path};
use crate::scenario::{Point2, Scenario};
use crate::solver::{solve_waypoints, SolveResult, SolverSettings};
use crate::trajectory::{audit_outage, synthesize, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Optimal,
    Suboptimal,
    Straight,
    Dp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Optimal, Method::Suboptimal, Method::Straight, Method::Dp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Suboptimal => "suboptimal",
            Method::Straight => "straight",
            Method::Dp => "dp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanStatus {
    Complete,
    /// Path enumeration hit its cap; the plan is the best among the
    /// enumerated sequences only.
    BestFound { enumerated: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub method: Method,
    pub sequence: Option<AssociationSequence>,
    pub waypoints: Option<WaypointPlan>,
    /// Flown polyline from u0 to uF.
    pub polyline: Vec<Point2>,
    pub objective_m: f64,
    pub completion_time_s: f64,
    pub obar_s: f64,
    /// Analytically audited maximum outage duration of the polyline.
    pub max_outage_s: f64,
    pub status: PlanStatus,
    /// Sequences whose solve stopped before certifying its tolerance.
    pub unconverged_solves: usize,
}

impl Plan {
    pub(crate) fn from_polyline(method: Method, polyline: Vec<Point2>, s: &Scenario, obar_s: f64) -> Self {
        let traj = Trajectory::from_polyline(&polyline, s.v_max());
        let objective_m: f64 = polyline.windows(2).map(|w| w[0].dist(w[1])).sum();
        Plan {
            method,
            sequence: None,
            waypoints: None,
            polyline,
            objective_m,
            completion_time_s: objective_m / s.v_max(),
            obar_s,
            max_outage_s: audit_outage(&traj, s).max_outage_s,
            status: PlanStatus::Complete,
            unconverged_solves: 0,
        }
    }

    fn from_solve(method: Method, r: SolveResult, s: &Scenario, obar_s: f64) -> Self {
        let traj = synthesize(&r.plan, s);
        let seq = r.plan.sequence.clone();
        Plan {
            method,
            sequence: Some(seq),
            polyline: r.plan.chain(),
            objective_m: r.objective_m,
            completion_time_s: r.objective_m / s.v_max(),
            obar_s,
            max_outage_s: audit_outage(&traj, s).max_outage_s,
            waypoints: Some(r.plan),
            status: PlanStatus::Complete,
            unconverged_solves: usize::from(!r.converged),
        }
    }

    pub fn trajectory(&self, s: &Scenario) -> Trajectory {
        match &self.waypoints {
            Some(w) => synthesize(w, s),
            None => Trajectory::from_polyline(&self.polyline, s.v_max()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub solver: SolverSettings,
    /// Upper limit on enumerated handover paths for the exact planner.
    pub path_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            path_cap: 100_000,
        }
    }
}

/// s̄_D: length of the polyline through u0, the serving GBS centers and uF.
pub fn path_length_upper_bound(seq: &AssociationSequence, s: &Scenario) -> f64 {
    let idx = seq.indices();
    let g = |i: usize| s.gbs()[idx[i]];
    let mut total = s.u0().dist(g(0)) + s.u_f().dist(g(idx.len() - 1));
    for i in 1..idx.len() {
        total += g(i).dist(g(i - 1));
    }
    total
}

/// Minimum total variation of a 1-D walk from `from` to `to` that visits the
/// intervals in order. Moving lazily to the nearest point is optimal.
fn ordered_interval_walk(from: f64, to: f64, intervals: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut lo, mut hi, mut cost) = (from, from, 0.0);
    for (a, b) in intervals {
        if b < lo {
            cost += lo - b;
            (lo, hi) = (b, b);
        } else if a > hi {
            cost += a - hi;
            (lo, hi) = (a, a);
        } else {
            (lo, hi) = (lo.max(a), hi.min(b));
        }
    }
    cost + (lo - to).max(0.0) + (to - hi).max(0.0)
}

/// Cheap lower bound on the shortest path that visits the sequence's disks in
/// order; used to skip sequences that cannot beat the incumbent.
pub fn path_length_lower_bound(seq: &AssociationSequence, s: &Scenario) -> f64 {
    let r = s.coverage_radius();
    let d = s.u_f() - s.u0();
    let len = d.norm();
    let e1 = if len > 0.0 { d * (1.0 / len) } else { Point2::new(1.0, 0.0) };
    let e2 = Point2::new(-e1.y, e1.x);
    let walk = |e: Point2| {
        ordered_interval_walk(
            e.dot(s.u0()),
            e.dot(s.u_f()),
            seq.indices().iter().map(|&m| {
                let c = e.dot(s.gbs()[m]);
                (c - r, c + r)
            }),
        )
    };
    let directional = walk(e1).hypot(walk(e2));
    let gaps: f64 = min_outage_gaps_m(seq, s).iter().sum();
    directional.max(gaps).max(len)
}

fn infeasible(obar_s: f64) -> Error {
    Error::Infeasible {
        budget_s: obar_s,
        reason: "U0 and UF are not connected in the handover graph".into(),
    }
}

/// Solve result that tolerates non-convergence by keeping the best iterate.
fn solve_lenient(seq: &AssociationSequence, s: &Scenario, obar_s: f64, cfg: &SolverSettings) -> Result<SolveResult> {
    match solve_waypoints(seq, s, obar_s, cfg) {
        Err(Error::NonConvergence { best, .. }) => Ok(*best),
        other => other,
    }
}

/// Exact planner: solve the waypoint problem for every handover path and
/// keep the shortest. Sequences whose lower bound already exceeds the
/// incumbent are skipped; ties go to the earliest path in DFS order.
pub fn plan_optimal(s: &Scenario, obar_s: f64, cfg: &PlannerConfig) -> Result<Plan> {
    let g = build_graph(s, obar_s);
    if !is_feasible(&g) {
        return Err(infeasible(obar_s));
    }
    let listing = enumerate_paths_capped(&g, cfg.path_cap);
    let paths = listing.paths;

    // Incumbent from the surrogate shortest path, then candidates by bound.
    let seed = shortest_weighted_path(&g).expect("feasible graph has a shortest path");
    let bounds: Vec<f64> = paths.iter().map(|q| path_length_lower_bound(q, s)).collect();
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| bounds[a].total_cmp(&bounds[b]).then(a.cmp(&b)));
    if let Some(pos) = order.iter().position(|&i| paths[i] == seed) {
        let i = order.remove(pos);
        order.insert(0, i);
    }

    const TIE_REL: f64 = 1e-9;
    let incumbent = AtomicU64::new(f64::INFINITY.to_bits());
    let solved: Vec<(usize, SolveResult)> = order
        .par_iter()
        .with_max_len(1)
        .filter_map(|&i| {
            let best = f64::from_bits(incumbent.load(Ordering::Relaxed));
            if bounds[i] > best * (1.0 + TIE_REL) {
                return None;
            }
            let r = solve_lenient(&paths[i], s, obar_s, &cfg.solver).ok()?;
            // Positive floats order like their bit patterns.
            incumbent.fetch_min(r.objective_m.to_bits(), Ordering::Relaxed);
            Some((i, r))
        })
        .collect();

    let min_obj = solved.iter().map(|(_, r)| r.objective_m).fold(f64::INFINITY, f64::min);
    let unconverged = solved.iter().filter(|(_, r)| !r.converged).count();
    let (_, best) = solved
        .into_iter()
        .filter(|(_, r)| r.objective_m <= min_obj * (1.0 + TIE_REL))
        .min_by_key(|(i, _)| *i)
        .ok_or_else(|| infeasible(obar_s))?;
    let mut plan = Plan::from_solve(Method::Optimal, best, s, obar_s);
    plan.unconverged_solves = unconverged;
    if listing.truncated {
        plan.status = PlanStatus::BestFound {
            enumerated: paths.len(),
            cap: cfg.path_cap,
        };
    }
    Ok(plan)
}

/// Suboptimal planner: sequence from the shortest W_M path, then waypoints
/// from the convex solver.
pub fn plan_suboptimal(s: &Scenario, obar_s: f64, cfg: &PlannerConfig) -> Result<Plan> {
    let g = build_graph(s, obar_s);
    let seq = shortest_weighted_path(&g).ok_or_else(|| infeasible(obar_s))?;
    let r = solve_lenient(&seq, s, obar_s, &cfg.solver)?;
    Ok(Plan::from_solve(Method::Suboptimal, r, s, obar_s))
}

/// Direct u0 -> uF flight with its audited outage; independent of the budget.
pub fn plan_straight(s: &Scenario) -> Plan {
    let mut plan = Plan::from_polyline(Method::Straight, vec![s.u0(), s.u_f()], s, 0.0);
    plan.obar_s = plan.max_outage_s;
    plan
}
