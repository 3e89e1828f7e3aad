//! Time-parameterized piecewise-linear trajectories and their outage audit.
//!
//! A trajectory is flown at constant speed `V_max` along a polyline. The
//! audit is analytic: on every segment the covered set under each disk is a
//! chord, the union of chords is the covered set, and its complement within
//! the mission window is the outage set.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_disk_chord, WaypointPlan, DISK_TOL_M};
use crate::scenario::{closest_gbs, CoverageDisk, Point2, Scenario};

/// Segments shorter than this are collapsed when synthesizing breakpoints.
const COLLAPSE_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub pos: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub breakpoints: Vec<Breakpoint>,
    pub speed_mps: f64,
    /// `(t_i^I, t_i^O)` for each serving GBS when built from a waypoint plan.
    pub critical_times: Vec<(f64, f64)>,
}

impl Trajectory {
    /// Constant-speed flight along `points`. Zero-length segments are dropped.
    pub fn from_polyline(points: &[Point2], speed_mps: f64) -> Self {
        assert!(!points.is_empty(), "a trajectory needs at least one point");
        let mut breakpoints = vec![Breakpoint { t: 0.0, pos: points[0] }];
        let mut len = 0.0;
        let mut last = points[0];
        for &p in &points[1..] {
            let seg = last.dist(p);
            len += seg;
            if seg > COLLAPSE_M {
                breakpoints.push(Breakpoint { t: len / speed_mps, pos: p });
            }
            last = p;
        }
        // Keep the final point exact even if the last segment was collapsed.
        let end = *points.last().unwrap();
        if breakpoints.len() > 1 {
            let tail = breakpoints.last_mut().unwrap();
            tail.pos = end;
            tail.t = len / speed_mps;
        } else if end != points[0] {
            breakpoints.push(Breakpoint { t: len / speed_mps, pos: end });
        }
        Self {
            breakpoints,
            speed_mps,
            critical_times: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.t)
    }

    pub fn length(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[0].pos.dist(w[1].pos)).sum()
    }

    pub fn start(&self) -> Point2 {
        self.breakpoints[0].pos
    }

    pub fn end(&self) -> Point2 {
        self.breakpoints.last().unwrap().pos
    }

    pub fn points(&self) -> Vec<Point2> {
        self.breakpoints.iter().map(|b| b.pos).collect()
    }

    /// Position at time `t`, clamped to the mission window.
    pub fn position_at(&self, t: f64) -> Point2 {
        let bps = &self.breakpoints;
        if t <= bps[0].t {
            return bps[0].pos;
        }
        let k = bps.partition_point(|b| b.t <= t);
        if k >= bps.len() {
            return bps[bps.len() - 1].pos;
        }
        let (a, b) = (bps[k - 1], bps[k]);
        let span = b.t - a.t;
        if span <= 0.0 {
            return b.pos;
        }
        a.pos.lerp(b.pos, (t - a.t) / span)
    }
}

/// Trajectory of a waypoint plan: constant-speed flight through
/// `u0, u_1^I, u_1^O, ..., u_N^O, uF`, with the critical time instants.
pub fn synthesize(plan: &WaypointPlan, s: &Scenario) -> Trajectory {
    let chain = plan.chain();
    let v = s.v_max();
    let mut traj = Trajectory::from_polyline(&chain, v);
    let mut t = 0.0;
    let mut times = Vec::with_capacity(chain.len());
    times.push(0.0);
    for w in chain.windows(2) {
        t += w[0].dist(w[1]) / v;
        times.push(t);
    }
    traj.critical_times = (0..plan.enter.len())
        .map(|i| (times[2 * i + 1], times[2 * i + 2]))
        .collect();
    traj
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    /// Maximal outage intervals `(start_s, end_s)`, disjoint and ordered.
    pub intervals: Vec<(f64, f64)>,
    pub max_outage_s: f64,
    pub total_outage_s: f64,
}

impl OutageReport {
    fn from_intervals(intervals: Vec<(f64, f64)>) -> Self {
        let max_outage_s = intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
        let total_outage_s = intervals.iter().map(|(a, b)| b - a).sum();
        Self {
            intervals,
            max_outage_s,
            total_outage_s,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Exact outage audit of `traj` against every coverage disk of `s`.
pub fn audit_outage(traj: &Trajectory, s: &Scenario) -> OutageReport {
    audit_against(traj, &s.disks())
}

/// Exact outage audit against an arbitrary set of disks.
pub fn audit_against(traj: &Trajectory, disks: &[CoverageDisk]) -> OutageReport {
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for w in traj.breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = b.t - a.t;
        if span <= 0.0 {
            continue;
        }
        let mut chords: Vec<(f64, f64)> = disks
            .iter()
            .filter_map(|d| segment_disk_chord(a.pos, b.pos, d, DISK_TOL_M))
            .collect();
        chords.sort_by(|x, y| x.0.total_cmp(&y.0));
        let at = |f: f64| if f >= 1.0 { b.t } else { a.t + f * span };
        let mut cursor = 0.0;
        for (lo, hi) in chords {
            if lo > cursor {
                raw.push((at(cursor), at(lo)));
            }
            cursor = cursor.max(hi);
        }
        if cursor < 1.0 {
            raw.push((at(cursor), b.t));
        }
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        if hi <= lo {
            continue;
        }
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    OutageReport::from_intervals(merged)
}

fn covered(p: Point2, disks: &[CoverageDisk]) -> bool {
    disks.iter().any(|d| d.contains(p, DISK_TOL_M))
}

/// Sampling cross-check of [`audit_outage`]: each maximal run of uncovered
/// samples is measured between the midpoints to its covered neighbors.
pub fn audit_sampled(traj: &Trajectory, s: &Scenario, dt_s: f64) -> OutageReport {
    assert!(dt_s > 0.0);
    let disks = s.disks();
    let end = traj.duration();
    let mut times: Vec<f64> = (0..)
        .map(|k| k as f64 * dt_s)
        .take_while(|&t| t < end)
        .collect();
    times.push(end);
    let flags: Vec<bool> = times
        .iter()
        .map(|&t| !covered(traj.position_at(t), &disks))
        .collect();
    let mut intervals = Vec::new();
    let mut k = 0;
    while k < times.len() {
        if !flags[k] {
            k += 1;
            continue;
        }
        let first = k;
        while k + 1 < times.len() && flags[k + 1] {
            k += 1;
        }
        let last = k;
        let lo = if first == 0 { 0.0 } else { 0.5 * (times[first - 1] + times[first]) };
        let hi = if last + 1 == times.len() { end } else { 0.5 * (times[last] + times[last + 1]) };
        if hi > lo {
            intervals.push((lo, hi));
        }
        k += 1;
    }
    OutageReport::from_intervals(intervals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSample {
    pub t: f64,
    pub pos: Point2,
    pub snr_db: f64,
    /// 0-based index of the nearest GBS.
    pub serving_gbs: usize,
    pub in_outage: bool,
}

/// SNR toward the nearest GBS at multiples of `dt_s` and at every breakpoint.
pub fn snr_trace(traj: &Trajectory, s: &Scenario, dt_s: f64) -> Vec<SnrSample> {
    assert!(dt_s > 0.0, "sampling step must be positive");
    let end = traj.duration();
    let mut times: Vec<f64> = (0..)
        .map(|k| k as f64 * dt_s)
        .take_while(|&t| t <= end)
        .chain(traj.breakpoints.iter().map(|b| b.t))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let radius = s.coverage_radius();
    times
        .into_iter()
        .map(|t| {
            let pos = traj.position_at(t);
            let (m, d) = closest_gbs(pos, s);
            SnrSample {
                t,
                pos,
                snr_db: s.snr_db_at(d),
                serving_gbs: m,
                in_outage: d > radius + DISK_TOL_M,
            }
        })
        .collect()
}

pub const TRAJECTORY_CSV_HEADER: [&str; 6] = ["t_s", "x_m", "y_m", "serving_gbs", "snr_dB", "in_outage"];

pub fn write_trajectory_csv<W: Write>(out: W, samples: &[SnrSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_CSV_HEADER)?;
    for smp in samples {
        w.write_record([
            smp.t.to_string(),
            smp.pos.x.to_string(),
            smp.pos.y.to_string(),
            (smp.serving_gbs + 1).to_string(),
            smp.snr_db.to_string(),
            u8::from(smp.in_outage).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Reads `(t_s, x_m, y_m)` rows of a trajectory CSV back into breakpoints.
pub fn read_trajectory_csv(path: impl AsRef<Path>, speed_mps: f64) -> Result<Trajectory> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column {name}", path.display())))
    };
    let (ct, cx, cy) = (col("t_s")?, col("x_m")?, col("y_m")?);
    let mut breakpoints: Vec<Breakpoint> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("{}: bad number in row {:?}", path.display(), rec)))
        };
        let bp = Breakpoint {
            t: num(ct)?,
            pos: Point2::new(num(cx)?, num(cy)?),
        };
        if let Some(prev) = breakpoints.last() {
            if bp.t < prev.t {
                return Err(Error::Parse(format!("{}: times must be non-decreasing", path.display())));
            }
        }
        breakpoints.push(bp);
    }
    if breakpoints.is_empty() {
        return Err(Error::Parse(format!("{}: no rows", path.display())));
    }
    Ok(Trajectory {
        breakpoints,
        speed_mps,
        critical_times: Vec::new(),
    })
}
