//! Grid dynamic-programming baseline.
//!
//! The UAV is restricted to a square lattice of spacing Δ anchored at `u0`
//! and may jump to any lattice point within a `2 n_r × 2 n_r` window. The
//! search state is a lattice point plus the current outage streak, counted
//! in whole units of Δ and always rounded up, so every returned path meets
//! the budget exactly under the analytic audit. Outage along a move is
//! measured from its chords through the coverage disks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{segment_disk_chord, DISK_TOL_M};
use crate::planner::{Method, Plan};
use crate::scenario::{CoverageDisk, Point2, Scenario};

const LEN_TOL_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    /// Grid granularity Δ.
    pub delta_m: f64,
    /// Half-extent of the move window.
    pub n_r_m: f64,
    pub obar_s: f64,
    /// Corners of the searched area; defaults to the bounding box of the
    /// endpoints and every coverage disk.
    pub region: Option<(Point2, Point2)>,
}

impl DpConfig {
    pub fn new(delta_m: f64, n_r_m: f64, obar_s: f64) -> Self {
        Self {
            delta_m,
            n_r_m,
            obar_s,
            region: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_m > 0.0 && self.delta_m.is_finite()) {
            return Err(Error::Argument(format!("grid step must be positive, got {}", self.delta_m)));
        }
        if !(self.n_r_m >= self.delta_m && self.n_r_m.is_finite()) {
            return Err(Error::Argument(format!(
                "move window {} m must be at least the grid step {} m",
                self.n_r_m, self.delta_m
            )));
        }
        if !(self.obar_s >= 0.0 && self.obar_s.is_finite()) {
            return Err(Error::Argument(format!("outage budget must be non-negative, got {}", self.obar_s)));
        }
        Ok(())
    }
}

/// Outage profile of one straight move, in meters.
#[derive(Debug, Clone, Copy)]
struct MoveOutage {
    len: f64,
    touches: bool,
    /// Uncovered stretch before the first covered point.
    lead: f64,
    /// Uncovered stretch after the last covered point.
    trail: f64,
    /// Longest uncovered stretch strictly between covered parts.
    internal: f64,
}

fn move_outage(p: Point2, q: Point2, disks: &[CoverageDisk]) -> MoveOutage {
    let len = p.dist(q);
    let mut chords: Vec<(f64, f64)> = disks
        .iter()
        .filter_map(|d| segment_disk_chord(p, q, d, DISK_TOL_M))
        .collect();
    if chords.is_empty() {
        return MoveOutage {
            len,
            touches: false,
            lead: len,
            trail: len,
            internal: 0.0,
        };
    }
    chords.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lead = chords[0].0 * len;
    let mut cursor = chords[0].1;
    let mut internal: f64 = 0.0;
    for &(lo, hi) in &chords[1..] {
        if lo > cursor {
            internal = internal.max((lo - cursor) * len);
        }
        cursor = cursor.max(hi);
    }
    MoveOutage {
        len,
        touches: true,
        lead,
        trail: (1.0 - cursor).max(0.0) * len,
        internal,
    }
}

struct Lattice {
    origin: Point2,
    step: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
}

impl Lattice {
    fn point(&self, id: usize) -> Point2 {
        let (i, j) = self.coords(id);
        self.origin + Point2::new(i as f64 * self.step, j as f64 * self.step)
    }

    fn coords(&self, id: usize) -> (i64, i64) {
        ((id % self.nx) as i64 + self.i0, (id / self.nx) as i64 + self.j0)
    }

    fn id(&self, i: i64, j: i64) -> Option<usize> {
        let (a, b) = (i - self.i0, j - self.j0);
        (a >= 0 && b >= 0 && (a as usize) < self.nx && (b as usize) < self.ny)
            .then(|| b as usize * self.nx + a as usize)
    }

    fn len(&self) -> usize {
        self.nx * self.ny
    }
}

fn lattice_offset(d: f64, step: f64, what: &str) -> Result<i64> {
    let k = (d / step).round();
    if (k * step - d).abs() > 1e-6 {
        return Err(Error::Argument(format!(
            "{what} is not on the {step} m grid anchored at u0"
        )));
    }
    Ok(k as i64)
}

fn build_lattice(s: &Scenario, cfg: &DpConfig) -> Result<(Lattice, usize)> {
    let u0 = s.u0();
    let uf = s.u_f();
    let step = cfg.delta_m;
    let (lo, hi) = match cfg.region {
        Some((a, b)) => (
            Point2::new(a.x.min(b.x), a.y.min(b.y)),
            Point2::new(a.x.max(b.x), a.y.max(b.y)),
        ),
        None => {
            let r = s.coverage_radius();
            let mut lo = Point2::new(u0.x.min(uf.x), u0.y.min(uf.y));
            let mut hi = Point2::new(u0.x.max(uf.x), u0.y.max(uf.y));
            for g in s.gbs() {
                lo = Point2::new(lo.x.min(g.x - r), lo.y.min(g.y - r));
                hi = Point2::new(hi.x.max(g.x + r), hi.y.max(g.y + r));
            }
            (lo, hi)
        }
    };
    let inside = |p: Point2| p.x >= lo.x - 1e-6 && p.x <= hi.x + 1e-6 && p.y >= lo.y - 1e-6 && p.y <= hi.y + 1e-6;
    if !inside(u0) || !inside(uf) {
        return Err(Error::Argument("u0 and uF must lie inside the DP region".into()));
    }
    let fi = lattice_offset(uf.x - u0.x, step, "uF")?;
    let fj = lattice_offset(uf.y - u0.y, step, "uF")?;
    let i0 = ((lo.x - u0.x) / step + 1e-9).ceil() as i64;
    let i1 = ((hi.x - u0.x) / step - 1e-9).floor() as i64;
    let j0 = ((lo.y - u0.y) / step + 1e-9).ceil() as i64;
    let j1 = ((hi.y - u0.y) / step - 1e-9).floor() as i64;
    let (i0, i1) = (i0.min(0).min(fi), i1.max(0).max(fi));
    let (j0, j1) = (j0.min(0).min(fj), j1.max(0).max(fj));
    let lat = Lattice {
        origin: u0,
        step,
        i0,
        j0,
        nx: (i1 - i0 + 1) as usize,
        ny: (j1 - j0 + 1) as usize,
    };
    let goal = lat.id(fi, fj).expect("uF inside lattice");
    Ok((lat, goal))
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    state: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest budget-respecting lattice path from `u0` to `uF`.
pub fn plan_dp(s: &Scenario, cfg: &DpConfig) -> Result<Plan> {
    cfg.validate()?;
    let (lat, goal) = build_lattice(s, cfg)?;
    let step = cfg.delta_m;
    let cap = cfg.obar_s * s.v_max();
    let buckets = ((cap + LEN_TOL_M) / step).floor() as usize + 1;
    let reach = (cfg.n_r_m / step + 1e-9).floor() as i64;
    let offsets: Vec<(i64, i64)> = (-reach..=reach)
        .flat_map(|dj| (-reach..=reach).map(move |di| (di, dj)))
        .filter(|&o| o != (0, 0))
        .collect();
    let disks = s.disks();

    let n = lat.len();
    let mut moves: Vec<Option<Vec<(usize, MoveOutage)>>> = vec![None; n];
    let mut dist = vec![f64::INFINITY; n * buckets];
    let mut prev = vec![usize::MAX; n * buckets];
    let start = lat.id(0, 0).expect("u0 inside lattice") * buckets;
    dist[start] = 0.0;
    let mut heap = BinaryHeap::from([Entry { cost: 0.0, state: start }]);
    let mut reached = None;

    while let Some(Entry { cost, state }) = heap.pop() {
        if cost > dist[state] {
            continue;
        }
        let (p, b) = (state / buckets, state % buckets);
        if p == goal {
            reached = Some(state);
            break;
        }
        let streak = b as f64 * step;
        let out = moves[p].get_or_insert_with(|| {
            let (i, j) = lat.coords(p);
            let from = lat.point(p);
            offsets
                .iter()
                .filter_map(|&(di, dj)| lat.id(i + di, j + dj))
                .map(|q| (q, move_outage(from, lat.point(q), &disks)))
                .collect()
        });
        for &(q, m) in out.iter() {
            let next_streak = if m.touches {
                if streak + m.lead > cap + LEN_TOL_M || m.internal > cap + LEN_TOL_M {
                    continue;
                }
                m.trail
            } else {
                streak + m.len
            };
            let nb = (next_streak / step - 1e-9).ceil().max(0.0) as usize;
            if nb >= buckets || nb as f64 * step > cap + LEN_TOL_M {
                continue;
            }
            let next = q * buckets + nb;
            let c = cost + m.len;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = state;
                heap.push(Entry { cost: c, state: next });
            }
        }
    }

    let Some(end) = reached else {
        return Err(Error::DpInfeasible {
            delta_m: step,
            reason: format!(
                "no lattice path keeps every outage within {} s (the grid may be too coarse even if the continuous problem is feasible)",
                cfg.obar_s
            ),
        });
    };
    let mut ids = vec![end / buckets];
    let mut cur = end;
    while prev[cur] != usize::MAX {
        cur = prev[cur];
        ids.push(cur / buckets);
    }
    ids.reverse();
    let mut polyline: Vec<Point2> = ids.iter().map(|&id| lat.point(id)).collect();
    polyline[0] = s.u0();
    *polyline.last_mut().expect("non-empty path") = s.u_f();
    Ok(Plan::from_polyline(Method::Dp, polyline, s, cfg.obar_s))
}
