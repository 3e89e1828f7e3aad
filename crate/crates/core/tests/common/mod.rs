#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_outage::{Point2, Scenario};

pub fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

/// Two touching disks on the x-axis, endpoints 50 m outside each.
pub fn s1() -> Scenario {
    Scenario::with_radius(vec![p(0.0, 0.0), p(200.0, 0.0)], p(-150.0, 0.0), p(350.0, 0.0), 100.0, 10.0).unwrap()
}

/// One disk covering both endpoints.
pub fn s2() -> Scenario {
    Scenario::with_radius(vec![p(0.0, 0.0)], p(-50.0, 0.0), p(50.0, 0.0), 100.0, 10.0).unwrap()
}

/// Two disks 200 m apart edge to edge.
pub fn s3() -> Scenario {
    Scenario::with_radius(vec![p(0.0, 0.0), p(400.0, 0.0)], p(-150.0, 0.0), p(550.0, 0.0), 100.0, 10.0).unwrap()
}

/// Endpoints on two GBSs with a relay off the axis.
pub fn s4() -> Scenario {
    Scenario::with_radius(
        vec![p(0.0, 0.0), p(600.0, 0.0), p(300.0, 250.0)],
        p(0.0, 0.0),
        p(600.0, 0.0),
        100.0,
        10.0,
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random desk-scale world: `m` GBSs in a 1 km square, radius 80–160 m.
pub fn random_scenario(r: &mut ChaCha8Rng, m: usize) -> Scenario {
    loop {
        let gbs: Vec<Point2> = (0..m).map(|_| p(r.gen_range(0.0..1000.0), r.gen_range(0.0..1000.0))).collect();
        let u0 = p(r.gen_range(-100.0..200.0), r.gen_range(-100.0..200.0));
        let uf = p(r.gen_range(800.0..1100.0), r.gen_range(800.0..1100.0));
        let radius = r.gen_range(80.0..160.0);
        if let Ok(s) = Scenario::with_radius(gbs, u0, uf, radius, 10.0) {
            return s;
        }
    }
}

/// Every ordered selection of distinct indices from `0..m`.
pub fn all_sequences(m: usize) -> Vec<Vec<usize>> {
    fn grow(m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        for k in 0..m {
            if !cur.contains(&k) {
                cur.push(k);
                grow(m, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(m, &mut Vec::new(), &mut out);
    out
}

/// Smallest budget (s) at which `seq` meets the three handover conditions,
/// evaluated straight from the coordinates.
pub fn sequence_budget(s: &Scenario, seq: &[usize]) -> f64 {
    let g = s.gbs();
    let r = s.coverage_radius();
    let mut worst: f64 = 0.0;
    worst = worst.max(s.u0().dist(g[seq[0]]) - r);
    worst = worst.max(s.u_f().dist(g[*seq.last().unwrap()]) - r);
    for w in seq.windows(2) {
        worst = worst.max(g[w[0]].dist(g[w[1]]) - 2.0 * r);
    }
    worst.max(0.0) / s.v_max()
}
