//! Minimum-completion-time UAV trajectory planning under a maximum
//! communication-outage duration constraint.
//!
//! The UAV flies at constant speed from `u0` to `uF` over a set of ground
//! base stations, each covering a horizontal disk of radius d̄. A trajectory
//! is acceptable when no contiguous stretch outside every disk lasts longer
//! than the outage budget. Optimal trajectories are polylines through
//! enter/exit waypoints of an ordered set of disks, so planning splits into
//! a graph search over handover sequences and a convex waypoint problem per
//! sequence.

pub mod cli;
pub mod dp;
pub mod error;
pub mod gen;
pub mod geometry;
pub mod graph;
pub mod planner;
pub mod scenario;
pub mod solver;
pub mod trajectory;

pub use dp::{plan_dp, DpConfig};
pub use error::{Error, Result};
pub use gen::generate_scenario;
pub use geometry::{min_outage_value, min_outage_waypoints, AssociationSequence, WaypointPlan};
pub use graph::{build_graph, is_feasible, min_feasible_outage, ConnectivityGraph};
pub use planner::{plan_optimal, plan_straight, plan_suboptimal, Method, Plan, PlannerConfig};
pub use scenario::{load_scenario, Point2, Scenario, ScenarioParams};
pub use solver::{solve_waypoints, SolveResult, SolverSettings};
pub use trajectory::{audit_outage, synthesize, OutageReport, Trajectory};
