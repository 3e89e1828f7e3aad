//! Coverage-disk geometry and the closed-form outage-minimizing waypoints
//! for a fixed GBS-UAV association sequence.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{CoverageDisk, Point2, Scenario};

/// Absolute tolerance for disk-membership tests, in meters.
pub const DISK_TOL_M: f64 = 1e-9;

/// Ordered, pairwise-distinct GBS indices (0-based) serving the UAV in turn.
/// Serialized 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssociationSequence(Vec<usize>);

impl Serialize for AssociationSequence {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for AssociationSequence {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(de)?;
        let bound = raw.iter().copied().max().unwrap_or(0);
        Self::from_one_based(&raw, bound).map_err(serde::de::Error::custom)
    }
}

impl AssociationSequence {
    /// Checks non-emptiness, index range and distinctness against `num_gbs`.
    pub fn new(indices: Vec<usize>, num_gbs: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Sequence("sequence is empty".into()));
        }
        let mut seen = vec![false; num_gbs];
        for &m in &indices {
            if m >= num_gbs {
                return Err(Error::Sequence(format!(
                    "GBS index {} out of range 1..={num_gbs}",
                    m + 1
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::Sequence(format!("GBS {} repeated", m + 1)));
            }
        }
        Ok(Self(indices))
    }

    /// Builds from 1-based indices as written in files and on the command line.
    pub fn from_one_based(indices: &[usize], num_gbs: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::Sequence("GBS indices are 1-based".into()));
        }
        Self::new(indices.iter().map(|m| m - 1).collect(), num_gbs)
    }

    pub(crate) fn from_vec_unchecked(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|m| m + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for AssociationSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, m) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("→")?;
            }
            write!(f, "G{}", m + 1)?;
        }
        Ok(())
    }
}

/// Critical waypoints u_i^I (enter) and u_i^O (exit) for each serving GBS,
/// bracketed by the mission endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub sequence: AssociationSequence,
    pub enter: Vec<Point2>,
    pub exit: Vec<Point2>,
    pub start: Point2,
    pub finish: Point2,
}

impl WaypointPlan {
    /// `[u0, u_1^I, u_1^O, ..., u_N^I, u_N^O, uF]`.
    pub fn chain(&self) -> Vec<Point2> {
        let mut pts = Vec::with_capacity(2 * self.enter.len() + 2);
        pts.push(self.start);
        for (a, b) in self.enter.iter().zip(&self.exit) {
            pts.push(*a);
            pts.push(*b);
        }
        pts.push(self.finish);
        pts
    }

    /// Lengths of the N+1 handover ("gap") segments u_{i-1}^O -> u_i^I.
    pub fn gap_lengths(&self) -> Vec<f64> {
        let chain = self.chain();
        chain.chunks_exact(2).map(|w| w[0].dist(w[1])).collect()
    }

    /// Lengths of the N in-disk segments u_i^I -> u_i^O.
    pub fn covered_lengths(&self) -> Vec<f64> {
        self.enter
            .iter()
            .zip(&self.exit)
            .map(|(a, b)| a.dist(*b))
            .collect()
    }

    /// Total polyline length.
    pub fn length(&self) -> f64 {
        self.chain().windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

/// Nearest point of `disk` to `p`.
pub fn project_to_disk(p: Point2, disk: &CoverageDisk) -> Point2 {
    let off = p - disk.center;
    let r = off.norm();
    if r <= disk.radius {
        p
    } else {
        disk.center + off * (disk.radius / r)
    }
}

/// Point on the boundary of the disk around `center` in the direction of `toward`.
fn boundary_toward(center: Point2, toward: Point2, radius: f64) -> Result<Point2> {
    let off = toward - center;
    let r = off.norm();
    if r == 0.0 {
        return Err(Error::Degenerate(format!(
            "direction from {center} toward itself is undefined"
        )));
    }
    Ok(center + off * (radius / r))
}

/// Closed-form waypoints minimizing the maximum outage for `seq`.
///
/// The first entry point is `u0` when `u0` is covered by the first GBS, and
/// otherwise the boundary point facing `u0`; the last exit point is handled
/// symmetrically. Between consecutive GBSs the UAV leaves the previous disk
/// on the segment joining the two centers, and enters the next disk at the
/// same point if the disks overlap, or at the facing boundary point if not.
pub fn min_outage_waypoints(seq: &AssociationSequence, s: &Scenario) -> Result<WaypointPlan> {
    let radius = s.coverage_radius();
    let idx = seq.indices();
    let n = idx.len();
    let g = |i: usize| s.gbs()[idx[i]];
    let mut enter = vec![Point2::default(); n];
    let mut exit = vec![Point2::default(); n];

    enter[0] = if s.u0().dist(g(0)) <= radius {
        s.u0()
    } else {
        boundary_toward(g(0), s.u0(), radius)?
    };
    exit[n - 1] = if s.u_f().dist(g(n - 1)) <= radius {
        s.u_f()
    } else {
        boundary_toward(g(n - 1), s.u_f(), radius)?
    };
    for i in 1..n {
        let (prev, next) = (g(i - 1), g(i));
        exit[i - 1] = boundary_toward(prev, next, radius)?;
        enter[i] = if prev.dist(next) <= 2.0 * radius {
            exit[i - 1]
        } else {
            boundary_toward(next, prev, radius)?
        };
    }
    Ok(WaypointPlan {
        sequence: seq.clone(),
        enter,
        exit,
        start: s.u0(),
        finish: s.u_f(),
    })
}

/// Handover distances (meters) that must be flown in outage for `seq`:
/// the two endpoint legs and each center-to-center gap, all clamped at zero.
pub fn min_outage_gaps_m(seq: &AssociationSequence, s: &Scenario) -> Vec<f64> {
    let radius = s.coverage_radius();
    let idx = seq.indices();
    let n = idx.len();
    let g = |i: usize| s.gbs()[idx[i]];
    let mut gaps = Vec::with_capacity(n + 1);
    gaps.push((s.u0().dist(g(0)) - radius).max(0.0));
    for i in 1..n {
        gaps.push((g(i).dist(g(i - 1)) - 2.0 * radius).max(0.0));
    }
    gaps.push((s.u_f().dist(g(n - 1)) - radius).max(0.0));
    gaps
}

/// Smallest achievable maximum outage duration (seconds) for `seq`.
pub fn min_outage_value(seq: &AssociationSequence, s: &Scenario) -> f64 {
    min_outage_gaps_m(seq, s).into_iter().fold(0.0, f64::max) / s.v_max()
}

/// Parameter interval `[a, b] ⊂ [0, 1]` of the segment `p -> q` lying inside
/// the disk (grown by `tol`), or `None` if they do not meet.
pub fn segment_disk_chord(p: Point2, q: Point2, disk: &CoverageDisk, tol: f64) -> Option<(f64, f64)> {
    let d = q - p;
    let f = p - disk.center;
    let r = disk.radius + tol;
    let a = d.dot(d);
    let c = f.dot(f) - r * r;
    if a == 0.0 {
        return (c <= 0.0).then_some((0.0, 1.0));
    }
    let b = f.dot(d);
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Numerically stable roots of a t^2 + 2 b t + c.
    let (t1, t2) = if b >= 0.0 {
        let k = -b - sq;
        (k / a, if k != 0.0 { c / k } else { 0.0 })
    } else {
        let k = -b + sq;
        (if k != 0.0 { c / k } else { 0.0 }, k / a)
    };
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    (lo <= hi).then_some((lo, hi))
}
