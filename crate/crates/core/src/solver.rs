//! Fixed-sequence waypoint optimization.
//!
//! For a given association sequence the planning problem reduces to
//!
//! ```text
//! minimize    Σ_k ‖z_{k+1} - z_k‖          over z_1..z_{2N}
//! subject to  z_{2i-1}, z_{2i} ∈ C_{I_i}    (enter / exit points)
//!             ‖z_{2i} - z_{2i-1}‖ ≤ V_max·Ō  for every handover segment
//! ```
//!
//! with `z_0 = u0` and `z_{2N+1} = uF` fixed. The solver is ADMM on the
//! splitting `w = Dz + b` (segment vectors) and `p = z` (disk copies). Every
//! sub-step is closed form: a constant tridiagonal solve for `z`, a radial
//! shrink-and-clip for each `w_k`, and a disk projection for each `p_j`. The
//! dual iterate yields a lower bound on the optimum, which certifies the
//! stopping point.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{min_outage_waypoints, project_to_disk, AssociationSequence, WaypointPlan, DISK_TOL_M};
use crate::scenario::{CoverageDisk, Point2, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative optimality tolerance on the path length.
    pub tol_rel: f64,
    pub max_iters: usize,
    /// Allowed constraint violation, meters.
    pub feas_tol_m: f64,
    /// Record one trace row per convergence check.
    pub trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_rel: 1e-6,
            max_iters: 50_000,
            feas_tol_m: 1e-4,
            trace: false,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0) || !(self.feas_tol_m > 0.0) {
            return Err(Error::Argument("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective_m: f64,
    pub max_violation_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub plan: WaypointPlan,
    /// Polyline length of `plan`.
    pub objective_m: f64,
    /// Certified bound on `objective_m - optimum` (infinite when the
    /// oracle or an uncertified exit produced the plan).
    pub gap_m: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// Constraint violations of a plan, measured from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanCheck {
    /// Largest distance of a waypoint outside its serving disk.
    pub disk_violation_m: f64,
    /// Largest excess of a handover segment over `V_max · budget`.
    pub cap_violation_m: f64,
}

impl PlanCheck {
    pub fn passes(&self, feas_tol_m: f64) -> bool {
        self.disk_violation_m <= feas_tol_m && self.cap_violation_m <= feas_tol_m
    }
}

/// Independent feasibility check of a waypoint plan for `budget_s`.
pub fn check_plan(plan: &WaypointPlan, s: &Scenario, budget_s: f64) -> PlanCheck {
    let radius = s.coverage_radius();
    let mut disk_violation_m: f64 = 0.0;
    for (k, &m) in plan.sequence.indices().iter().enumerate() {
        let g = s.gbs()[m];
        disk_violation_m = disk_violation_m
            .max(plan.enter[k].dist(g) - radius)
            .max(plan.exit[k].dist(g) - radius);
    }
    let cap = s.v_max() * budget_s;
    let cap_violation_m = plan
        .gap_lengths()
        .into_iter()
        .map(|l| l - cap)
        .fold(0.0, f64::max);
    PlanCheck {
        disk_violation_m: disk_violation_m.max(0.0),
        cap_violation_m,
    }
}

fn plan_from_points(seq: &AssociationSequence, s: &Scenario, z: &[Point2]) -> WaypointPlan {
    WaypointPlan {
        sequence: seq.clone(),
        enter: z.iter().step_by(2).copied().collect(),
        exit: z.iter().skip(1).step_by(2).copied().collect(),
        start: s.u0(),
        finish: s.u_f(),
    }
}

/// Precomputed Thomas elimination for `tridiag(-1, 3, -1)` of size `n`.
struct Tridiagonal {
    /// Modified super-diagonal.
    c: Vec<f64>,
    /// Reciprocal pivots.
    inv: Vec<f64>,
}

impl Tridiagonal {
    fn new(n: usize) -> Self {
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let pivot = 3.0 + prev_c; // 3 - (-1)·c'_{i-1}
            inv[i] = 1.0 / pivot;
            c[i] = -inv[i];
            prev_c = c[i];
        }
        Self { c, inv }
    }

    fn solve(&self, rhs: &mut [Point2]) {
        let n = rhs.len();
        for i in 0..n {
            let carry = if i > 0 { rhs[i - 1] } else { Point2::default() };
            rhs[i] = (rhs[i] + carry) * self.inv[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] = rhs[i] - rhs[i + 1] * self.c[i];
        }
    }
}

struct Problem {
    u0: Point2,
    uf: Point2,
    /// Disk of each free point.
    disks: Vec<CoverageDisk>,
    /// Length cap of each segment (infinite for in-disk segments).
    caps: Vec<f64>,
}

impl Problem {
    fn segment(&self, z: &[Point2], k: usize) -> Point2 {
        let a = if k == 0 { self.u0 } else { z[k - 1] };
        let b = if k == z.len() { self.uf } else { z[k] };
        b - a
    }

    fn length(&self, z: &[Point2]) -> f64 {
        (0..=z.len()).map(|k| self.segment(z, k).norm()).sum()
    }

    fn cap_violation(&self, z: &[Point2]) -> f64 {
        (0..=z.len())
            .map(|k| self.segment(z, k).norm() - self.caps[k])
            .fold(0.0, f64::max)
    }

    /// Pulls both ends of every over-long capped segment toward `safe`
    /// (a feasible chain) just far enough to meet the cap. Convex
    /// combinations stay inside the disks.
    fn repair(&self, z: &[Point2], safe: &[Point2]) -> Vec<Point2> {
        let kp = z.len();
        let mut out = z.to_vec();
        for k in 0..=kp {
            let cap = self.caps[k];
            if cap.is_infinite() || self.segment(z, k).norm() <= cap {
                continue;
            }
            let at = |t: f64, j: usize| z[j].lerp(safe[j], t);
            let seg = |t: f64| {
                let a = if k == 0 { self.u0 } else { at(t, k - 1) };
                let b = if k == kp { self.uf } else { at(t, k) };
                (b - a).norm()
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if seg(mid) <= cap {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if k > 0 {
                out[k - 1] = at(hi, k - 1);
            }
            if k < kp {
                out[k] = at(hi, k);
            }
        }
        out
    }

    /// Dual objective at segment multipliers `lam` (in-disk multipliers are
    /// first pulled into the unit ball, which keeps the bound valid).
    fn dual_bound(&self, lam: &[Point2]) -> f64 {
        let k_pts = self.disks.len();
        let clipped: Vec<Point2> = lam
            .iter()
            .zip(&self.caps)
            .map(|(l, c)| {
                let r = l.norm();
                if c.is_infinite() && r > 1.0 {
                    *l * (1.0 / r)
                } else {
                    *l
                }
            })
            .collect();
        let mut val = clipped[k_pts].dot(self.uf) - clipped[0].dot(self.u0);
        for (l, c) in clipped.iter().zip(&self.caps) {
            if c.is_finite() {
                val -= c * (l.norm() - 1.0).max(0.0);
            }
        }
        for (j, disk) in self.disks.iter().enumerate() {
            let nu = clipped[j + 1] - clipped[j];
            val -= nu.dot(disk.center) + disk.radius * nu.norm();
        }
        val
    }
}

/// ε-optimal waypoints for `seq` under outage budget `budget_s`.
///
/// Starts from the closed-form outage-minimizing plan, which is feasible
/// exactly when the instance is; returns [`Error::Infeasible`] otherwise.
pub fn solve_waypoints(
    seq: &AssociationSequence,
    s: &Scenario,
    budget_s: f64,
    cfg: &SolverSettings,
) -> Result<SolveResult> {
    cfg.validate()?;
    let warm = min_outage_waypoints(seq, s)?;
    let cap = s.v_max() * budget_s;
    let warm_gaps = warm.gap_lengths();
    if let Some((i, g)) = warm_gaps.iter().enumerate().find(|(_, g)| **g > cap + cfg.feas_tol_m) {
        return Err(Error::Infeasible {
            budget_s,
            reason: format!(
                "handover {} of {seq} needs at least {g:.6} m of outage flight, cap is {cap:.6} m",
                i + 1
            ),
        });
    }

    let n = seq.len();
    let kp = 2 * n;
    let mut caps = vec![f64::INFINITY; kp + 1];
    // A gap whose cap is tight admits only the closed-form endpoints.
    let mut fixed = vec![false; kp];
    for (i, g) in warm_gaps.iter().enumerate() {
        // Never tighter than the closed-form plan, so it stays feasible.
        caps[2 * i] = cap.max(*g);
        if cap - g <= cfg.feas_tol_m {
            if i > 0 {
                fixed[2 * i - 1] = true;
            }
            if i < n {
                fixed[2 * i] = true;
            }
        }
    }
    let disks: Vec<CoverageDisk> = seq
        .indices()
        .iter()
        .flat_map(|&m| [s.disk(m), s.disk(m)])
        .collect();
    let mut z = warm.chain()[1..=kp].to_vec();
    let point = |z: &[Point2], j: isize| -> Point2 {
        if j < 0 {
            s.u0()
        } else if j as usize >= kp {
            s.u_f()
        } else {
            z[j as usize]
        }
    };

    let mut objective = 0.0;
    let mut gap_total = 0.0;
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut j = 0;
    let mut blocks = Vec::new();
    while j < kp {
        if fixed[j] {
            j += 1;
            continue;
        }
        let a = j;
        while j < kp && !fixed[j] {
            j += 1;
        }
        blocks.push((a, j));
    }
    // Segments joining two fixed ends have constant length.
    for k in 0..=kp {
        let lo_fixed = k == 0 || fixed[k - 1];
        let hi_fixed = k == kp || fixed[k];
        if lo_fixed && hi_fixed {
            objective += (point(&z, k as isize) - point(&z, k as isize - 1)).norm();
        }
    }
    for (a, b) in blocks {
        let prob = Problem {
            u0: point(&z, a as isize - 1),
            uf: point(&z, b as isize),
            disks: disks[a..b].to_vec(),
            caps: caps[a..=b].to_vec(),
        };
        let out = run_block(&prob, &z[a..b], cfg, iterations);
        z[a..b].copy_from_slice(&out.z);
        objective += out.objective;
        gap_total += out.gap;
        iterations += out.iterations;
        trace.extend(out.trace);
    }

    let converged = gap_total <= cfg.tol_rel * objective.max(f64::MIN_POSITIVE);
    let result = SolveResult {
        plan: plan_from_points(seq, s, &z),
        objective_m: objective,
        gap_m: gap_total,
        converged,
        iterations,
        trace,
    };
    if converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence {
            iterations,
            gap_m: gap_total,
            best: Box::new(result),
        })
    }
}

struct BlockResult {
    z: Vec<Point2>,
    objective: f64,
    gap: f64,
    iterations: usize,
    trace: Vec<TraceRow>,
}

/// ADMM on one chain of free points between two fixed anchors.
fn run_block(prob: &Problem, warm: &[Point2], cfg: &SolverSettings, iter_offset: usize) -> BlockResult {
    let kp = warm.len();
    let mut z = warm.to_vec();
    let warm_obj = prob.length(&z);
    let mut best = (warm_obj, z.clone());
    let mut trace = Vec::new();

    let lower = prob.uf.dist(prob.u0);
    if warm_obj - lower <= cfg.tol_rel * warm_obj.max(f64::MIN_POSITIVE) {
        return BlockResult {
            z,
            objective: warm_obj,
            gap: (warm_obj - lower).max(0.0),
            iterations: 0,
            trace,
        };
    }

    let scale = warm_obj.max(prob.disks[0].radius);
    let mut rho = (kp + 1) as f64 / scale;
    let mut w: Vec<Point2> = (0..=kp).map(|k| prob.segment(&z, k)).collect();
    let mut p = z.clone();
    // Scaled duals, seeded with unit multipliers along the warm segments.
    let mut y: Vec<Point2> = w
        .iter()
        .map(|s| {
            let r = s.norm();
            if r > 0.0 {
                *s * (1.0 / (r * rho))
            } else {
                Point2::default()
            }
        })
        .collect();
    let mut v: Vec<Point2> = (0..kp).map(|j| y[j + 1] - y[j]).collect();

    let tri = Tridiagonal::new(kp);
    let alpha = 1.6;
    let check_every = 10;
    let mut rhs = vec![Point2::default(); kp];
    let mut dz_prev = z.clone();
    let mut best_gap = f64::INFINITY;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        // z-update: (DᵀD + I) z = Dᵀ(w - y - b) + (p - v).
        for j in 0..kp {
            let mut r = w[j] - y[j] - (w[j + 1] - y[j + 1]) + p[j] - v[j];
            if j == 0 {
                r = r + prob.u0;
            }
            if j == kp - 1 {
                r = r + prob.uf;
            }
            rhs[j] = r;
        }
        tri.solve(&mut rhs);
        dz_prev.copy_from_slice(&z);
        z.copy_from_slice(&rhs);

        // w-update with over-relaxation.
        let inv_rho = 1.0 / rho;
        let mut w_change: f64 = 0.0;
        for k in 0..=kp {
            let h = prob.segment(&z, k) * alpha + w[k] * (1.0 - alpha);
            let a = h + y[k];
            let r = a.norm();
            let t = (r - inv_rho).max(0.0).min(prob.caps[k]);
            let new = if r > 0.0 { a * (t / r) } else { Point2::default() };
            w_change = w_change.max((new - w[k]).norm());
            y[k] = a - new;
            w[k] = new;
        }
        // p-update with over-relaxation.
        for j in 0..kp {
            let h = z[j] * alpha + p[j] * (1.0 - alpha);
            let a = h + v[j];
            let new = project_to_disk(a, &prob.disks[j]);
            v[j] = a - new;
            p[j] = new;
        }

        if iterations % check_every != 0 {
            continue;
        }
        let cand = prob.repair(&p, warm);
        let obj = prob.length(&cand);
        let viol = prob.cap_violation(&p);
        if cfg.trace {
            trace.push(TraceRow {
                iteration: iter_offset + iterations,
                objective_m: obj,
                max_violation_m: viol,
            });
        }
        let lam: Vec<Point2> = y.iter().map(|q| *q * rho).collect();
        let bound = prob.dual_bound(&lam).max(lower);
        if obj < best.0 {
            best = (obj, cand);
        }
        best_gap = best_gap.min((best.0 - bound).max(0.0));
        if best_gap <= cfg.tol_rel * best.0 {
            break;
        }

        // Residual balancing; the z-system does not depend on rho.
        if iterations % (check_every * 5) == 0 {
            let primal = (0..=kp)
                .map(|k| (prob.segment(&z, k) - w[k]).norm())
                .chain((0..kp).map(|j| (z[j] - p[j]).norm()))
                .fold(0.0, f64::max);
            let dual = rho * w_change.max(
                z.iter().zip(&dz_prev).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max),
            );
            let factor = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                y.iter_mut().for_each(|q| *q = *q * (1.0 / factor));
                v.iter_mut().for_each(|q| *q = *q * (1.0 / factor));
            }
        }
    }

    BlockResult {
        z: best.1,
        objective: best.0,
        gap: best_gap,
        iterations,
        trace,
    }
}

/// Candidate waypoints of a disk: lattice points inside it plus its boundary
/// sampled at arc length `step`.
fn disk_candidates(disk: &CoverageDisk, step: f64) -> Vec<Point2> {
    let c = disk.center;
    let r = disk.radius;
    let mut out = Vec::new();
    let (i0, i1) = (((c.x - r) / step).ceil() as i64, ((c.x + r) / step).floor() as i64);
    let (j0, j1) = (((c.y - r) / step).ceil() as i64, ((c.y + r) / step).floor() as i64);
    for i in i0..=i1 {
        for j in j0..=j1 {
            let q = Point2::new(i as f64 * step, j as f64 * step);
            if q.dist(c) <= r {
                out.push(q);
            }
        }
    }
    let arcs = ((std::f64::consts::TAU * r / step).ceil() as usize).max(8);
    for k in 0..arcs {
        let th = std::f64::consts::TAU * k as f64 / arcs as f64;
        out.push(c + Point2::new(th.cos(), th.sin()) * r);
    }
    out
}

/// Exhaustive grid search for N ≤ 2, used as an oracle for [`solve_waypoints`].
///
/// The chain structure makes the exhaustive minimum computable by dynamic
/// programming over the candidate sets, one transition per segment.
pub fn brute_force_waypoints(
    seq: &AssociationSequence,
    s: &Scenario,
    budget_s: f64,
    grid_step_m: f64,
) -> Result<SolveResult> {
    if seq.len() > 2 {
        return Err(Error::Argument("brute-force oracle supports at most two GBSs".into()));
    }
    if !(grid_step_m > 0.0) {
        return Err(Error::Argument("grid step must be positive".into()));
    }
    let cap = s.v_max() * budget_s + DISK_TOL_M;
    let layers: Vec<Vec<Point2>> = seq
        .indices()
        .iter()
        .flat_map(|&m| {
            let c = disk_candidates(&s.disk(m), grid_step_m);
            [c.clone(), c]
        })
        .collect();

    // cost[k][q]: shortest feasible chain from u0 ending at candidate q of layer k.
    let mut cost: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    let mut from: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    for (k, layer) in layers.iter().enumerate() {
        let capped = k % 2 == 0;
        let (c, f): (Vec<f64>, Vec<usize>) = if k == 0 {
            layer
                .iter()
                .map(|q| {
                    let d = q.dist(s.u0());
                    (if d <= cap { d } else { f64::INFINITY }, usize::MAX)
                })
                .unzip()
        } else {
            // Reachable candidates of the previous layer, bucketed by cap-sized
            // cells when the hop is capped.
            let live: Vec<(usize, Point2, f64)> = layers[k - 1]
                .iter()
                .zip(&cost[k - 1])
                .enumerate()
                .filter(|(_, (_, c))| c.is_finite())
                .map(|(i, (pp, c))| (i, *pp, *c))
                .collect();
            let cell = cap.max(grid_step_m);
            let key = |q: Point2| ((q.x / cell).floor() as i64, (q.y / cell).floor() as i64);
            let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
            if capped {
                for (j, (_, pp, _)) in live.iter().enumerate() {
                    buckets.entry(key(*pp)).or_default().push(j);
                }
            }
            let scan = |q: &Point2, j: usize, best: &mut (f64, usize)| {
                let (i, pp, pc) = live[j];
                if pc >= best.0 {
                    return;
                }
                let d = pp.dist(*q);
                if capped && d > cap {
                    return;
                }
                if pc + d < best.0 {
                    *best = (pc + d, i);
                }
            };
            layer
                .par_iter()
                .map(|q| {
                    let mut best = (f64::INFINITY, usize::MAX);
                    if capped {
                        let (cx, cy) = key(*q);
                        for dx in -1..=1 {
                            for dy in -1..=1 {
                                for &j in buckets.get(&(cx + dx, cy + dy)).map(Vec::as_slice).unwrap_or(&[]) {
                                    scan(q, j, &mut best);
                                }
                            }
                        }
                    } else {
                        for j in 0..live.len() {
                            scan(q, j, &mut best);
                        }
                    }
                    best
                })
                .unzip()
        };
        cost.push(c);
        from.push(f);
    }

    let last = layers.len() - 1;
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, (q, c)) in layers[last].iter().zip(&cost[last]).enumerate() {
        let d = q.dist(s.u_f());
        if c.is_finite() && d <= cap && c + d < best.0 {
            best = (c + d, i);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Infeasible {
            budget_s,
            reason: format!("no grid combination for {seq} respects the handover cap"),
        });
    }
    let mut picks = vec![0; layers.len()];
    picks[last] = best.1;
    for k in (1..layers.len()).rev() {
        picks[k - 1] = from[k][picks[k]];
    }
    let z: Vec<Point2> = picks.iter().enumerate().map(|(k, &i)| layers[k][i]).collect();
    let plan = plan_from_points(seq, s, &z);
    Ok(SolveResult {
        objective_m: plan.length(),
        plan,
        gap_m: f64::INFINITY,
        converged: true,
        iterations: 0,
        trace: Vec::new(),
    })
}

pub fn write_trace_csv<W: std::io::Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "objective_m", "max_violation_m"])?;
    for row in trace {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
