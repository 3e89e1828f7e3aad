//! Handover graph over {U0, G_1..G_M, UF}.
//!
//! An edge joins two vertices when the straight hop between their coverage
//! regions can be flown within the outage budget: `‖u0 - g_m‖ - d̄`,
//! `‖g_m - g_n‖ - 2d̄` and `‖uF - g_m‖ - d̄` are compared against
//! `V_max · budget`. Feasibility of the planning problem is U0-UF
//! connectivity; the distance weights drive the surrogate shortest-path
//! planner.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::geometry::AssociationSequence;
use crate::scenario::Scenario;

/// Default bisection tolerance on the outage budget, seconds.
pub const DEFAULT_BISECTION_TOL_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Start,
    Gbs(usize),
    Finish,
}

#[derive(Debug, Clone)]
pub struct ConnectivityGraph {
    num_gbs: usize,
    budget_s: f64,
    /// Outage distance of the hop between two vertices, clamped at zero.
    gap_m: Vec<f64>,
    /// Euclidean weight W_M of each vertex pair.
    weight_m: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl ConnectivityGraph {
    fn n(&self) -> usize {
        self.num_gbs + 2
    }

    fn start(&self) -> usize {
        0
    }

    fn finish(&self) -> usize {
        self.num_gbs + 1
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        match id {
            0 => Vertex::Start,
            k if k == self.num_gbs + 1 => Vertex::Finish,
            k => Vertex::Gbs(k - 1),
        }
    }

    fn id(&self, v: Vertex) -> usize {
        match v {
            Vertex::Start => 0,
            Vertex::Gbs(m) => m + 1,
            Vertex::Finish => self.num_gbs + 1,
        }
    }

    pub fn budget_s(&self) -> f64 {
        self.budget_s
    }

    pub fn num_gbs(&self) -> usize {
        self.num_gbs
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        let (a, b) = (self.id(a), self.id(b));
        self.adj[a].binary_search(&b).is_ok()
    }

    /// W_M for a vertex pair (defined whether or not the edge is present).
    pub fn weight(&self, a: Vertex, b: Vertex) -> f64 {
        self.weight_m[self.id(a) * self.n() + self.id(b)]
    }

    /// Outage distance of the hop `a -> b`, clamped at zero.
    pub fn gap(&self, a: Vertex, b: Vertex) -> f64 {
        self.gap_m[self.id(a) * self.n() + self.id(b)]
    }

    /// Neighbors of `v` in ascending vertex order.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[self.id(v)].iter().map(|&k| self.vertex(k))
    }

    /// Present edges as unordered pairs `(a, b)` with `a < b` in vertex order.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::new();
        for a in 0..self.n() {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((self.vertex(a), self.vertex(b)));
                }
            }
        }
        out
    }

    fn label(&self, id: usize) -> String {
        match self.vertex(id) {
            Vertex::Start => "U0".into(),
            Vertex::Finish => "UF".into(),
            Vertex::Gbs(m) => format!("G{}", m + 1),
        }
    }

    /// Graphviz rendering of vertices, present edges and their weights.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph handover {\n");
        let _ = writeln!(out, "  label=\"outage budget {} s\";", self.budget_s);
        for id in 0..self.n() {
            let _ = writeln!(out, "  {};", self.label(id));
        }
        for a in 0..self.n() {
            for &b in &self.adj[a] {
                if a < b {
                    let _ = writeln!(
                        out,
                        "  {} -- {} [weight={}, gap={}];",
                        self.label(a),
                        self.label(b),
                        self.weight_m[a * self.n() + b],
                        self.gap_m[a * self.n() + b]
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Pairwise hop data `(gap_m, weight_m)` over the extended vertex set.
fn hop_tables(s: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let m = s.num_gbs();
    let n = m + 2;
    let d = s.coverage_radius();
    let mut gap = vec![f64::INFINITY; n * n];
    let mut weight = vec![f64::INFINITY; n * n];
    let mut set = |a: usize, b: usize, g: f64, w: f64| {
        gap[a * n + b] = g;
        gap[b * n + a] = g;
        weight[a * n + b] = w;
        weight[b * n + a] = w;
    };
    for (k, g) in s.gbs().iter().enumerate() {
        let w0 = s.u0().dist(*g);
        set(0, k + 1, (w0 - d).max(0.0), w0);
        let wf = s.u_f().dist(*g);
        set(m + 1, k + 1, (wf - d).max(0.0), wf);
        for (l, h) in s.gbs().iter().enumerate().skip(k + 1) {
            let w = g.dist(*h);
            set(k + 1, l + 1, (w - 2.0 * d).max(0.0), w);
        }
    }
    (gap, weight)
}

pub fn build_graph(s: &Scenario, budget_s: f64) -> ConnectivityGraph {
    let (gap_m, weight_m) = hop_tables(s);
    let n = s.num_gbs() + 2;
    let v = s.v_max();
    let adj = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| b != a && gap_m[a * n + b].is_finite() && gap_m[a * n + b] / v <= budget_s)
                .collect()
        })
        .collect();
    ConnectivityGraph {
        num_gbs: s.num_gbs(),
        budget_s,
        gap_m,
        weight_m,
        adj,
    }
}

fn to_sequence(g: &ConnectivityGraph, path: &[usize]) -> AssociationSequence {
    let inner = path[1..path.len() - 1].iter().map(|&k| k - 1).collect();
    debug_assert!(path.first() == Some(&g.start()) && path.last() == Some(&g.finish()));
    AssociationSequence::from_vec_unchecked(inner)
}

/// Breadth-first search from U0; returns the fewest-hop witness path when UF
/// is reachable.
pub fn feasible_path(g: &ConnectivityGraph) -> Option<AssociationSequence> {
    let n = g.n();
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::from([g.start()]);
    parent[g.start()] = g.start();
    while let Some(v) = queue.pop_front() {
        if v == g.finish() {
            let mut path = vec![v];
            let mut cur = v;
            while cur != g.start() {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(to_sequence(g, &path));
        }
        for &w in &g.adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

pub fn is_feasible(g: &ConnectivityGraph) -> bool {
    feasible_path(g).is_some()
}

/// Minimum-total-W_M path from U0 to UF. Equal-weight paths are resolved
/// toward the lexicographically smallest GBS sequence.
pub fn shortest_weighted_path(g: &ConnectivityGraph) -> Option<AssociationSequence> {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut path: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    dist[g.start()] = 0.0;
    path[g.start()] = vec![g.start()];

    // Paths are compared as GBS sequences, so the trailing UF is dropped.
    let finish = g.finish();
    let key = |p: &[usize]| -> Vec<usize> {
        p.iter().copied().filter(|&v| v != finish).collect()
    };
    let better = |d: f64, p: &[usize], bd: f64, bp: &[usize]| d < bd || (d == bd && key(p) < key(bp));

    loop {
        let mut cur = None;
        for v in 0..n {
            if done[v] || dist[v].is_infinite() {
                continue;
            }
            match cur {
                None => cur = Some(v),
                Some(c) if better(dist[v], &path[v], dist[c], &path[c]) => cur = Some(v),
                _ => {}
            }
        }
        let v = cur?;
        if v == g.finish() {
            return Some(to_sequence(g, &path[v]));
        }
        done[v] = true;
        for &w in &g.adj[v] {
            if done[w] || w == g.start() {
                continue;
            }
            let nd = dist[v] + g.weight_m[v * n + w];
            let mut np = path[v].clone();
            np.push(w);
            if better(nd, &np, dist[w], &path[w]) {
                dist[w] = nd;
                path[w] = np;
            }
        }
    }
}

/// Lazy depth-first enumeration of every simple U0 -> UF path, visiting
/// neighbors in ascending vertex order.
pub struct PathIter<'a> {
    g: &'a ConnectivityGraph,
    stack: Vec<(usize, usize)>,
    on_path: Vec<bool>,
}

impl Iterator for PathIter<'_> {
    type Item = AssociationSequence;

    fn next(&mut self) -> Option<AssociationSequence> {
        let finish = self.g.finish();
        while let Some(&mut (v, ref mut cursor)) = self.stack.last_mut() {
            let nbrs = &self.g.adj[v];
            if *cursor >= nbrs.len() {
                self.on_path[v] = false;
                self.stack.pop();
                continue;
            }
            let w = nbrs[*cursor];
            *cursor += 1;
            if self.on_path[w] {
                continue;
            }
            if w == finish {
                let mut path: Vec<usize> = self.stack.iter().map(|&(u, _)| u).collect();
                path.push(w);
                return Some(to_sequence(self.g, &path));
            }
            self.on_path[w] = true;
            self.stack.push((w, 0));
        }
        None
    }
}

pub fn enumerate_paths(g: &ConnectivityGraph) -> PathIter<'_> {
    let mut on_path = vec![false; g.n()];
    on_path[g.start()] = true;
    PathIter {
        g,
        stack: vec![(g.start(), 0)],
        on_path,
    }
}

/// Result of a bounded enumeration.
#[derive(Debug, Clone)]
pub struct PathEnumeration {
    pub paths: Vec<AssociationSequence>,
    /// True when more paths existed beyond the cap.
    pub truncated: bool,
}

pub fn enumerate_paths_capped(g: &ConnectivityGraph, cap: usize) -> PathEnumeration {
    let mut it = enumerate_paths(g);
    let paths: Vec<_> = it.by_ref().take(cap).collect();
    let truncated = paths.len() == cap && it.next().is_some();
    PathEnumeration { paths, truncated }
}

/// Exact minimum feasible budget: the U0 -> UF path minimizing its largest
/// hop outage (minimax Dijkstra over the budget-independent hop gaps).
pub fn bottleneck_outage(s: &Scenario) -> (f64, AssociationSequence) {
    let g = build_graph(s, f64::INFINITY);
    let n = g.n();
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    best[g.start()] = 0.0;
    loop {
        let v = (0..n)
            .filter(|&v| !done[v] && best[v].is_finite())
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("U0 and UF are always connected at unbounded budget");
        if v == g.finish() {
            break;
        }
        done[v] = true;
        for &w in &g.adj[v] {
            if done[w] || w == g.start() {
                continue;
            }
            let cand = best[v].max(g.gap_m[v * n + w]);
            if cand < best[w] {
                best[w] = cand;
                parent[w] = v;
            }
        }
    }
    let mut path = vec![g.finish()];
    while *path.last().unwrap() != g.start() {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    (best[g.finish()] / s.v_max(), to_sequence(&g, &path))
}

/// Largest hop outage over all vertex pairs: a budget at which the graph is
/// complete, hence feasible.
pub fn budget_upper_bracket(s: &Scenario) -> f64 {
    let (gap, _) = hop_tables(s);
    gap.into_iter().filter(|g| g.is_finite()).fold(0.0, f64::max) / s.v_max()
}

/// Smallest feasible outage budget, found by bisection on graph connectivity.
/// The returned value is feasible and within `tol_s` of the true minimum.
pub fn min_feasible_outage(s: &Scenario, tol_s: f64) -> f64 {
    assert!(tol_s > 0.0, "bisection tolerance must be positive");
    if is_feasible(&build_graph(s, 0.0)) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, budget_upper_bracket(s));
    while hi - lo > tol_s {
        let mid = 0.5 * (lo + hi);
        if is_feasible(&build_graph(s, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Point2;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn s4() -> Scenario {
        Scenario::with_radius(
            vec![p(0.0, 0.0), p(600.0, 0.0), p(300.0, 250.0)],
            p(0.0, 0.0),
            p(600.0, 0.0),
            100.0,
            10.0,
        )
        .unwrap()
    }

    use Vertex::{Finish as UF, Gbs, Start as U0};

    #[test]
    fn s4_edges_at_20s() {
        let g = build_graph(&s4(), 20.0);
        assert_eq!(
            g.edges(),
            vec![(U0, Gbs(0)), (Gbs(0), Gbs(2)), (Gbs(1), Gbs(2)), (Gbs(1), UF)]
        );
        assert!(!g.has_edge(Gbs(0), Gbs(1)));
        assert!(!g.has_edge(U0, UF));
        assert!(is_feasible(&g));
        assert_eq!(feasible_path(&g).unwrap().one_based(), vec![1, 3, 2]);
    }

    #[test]
    fn s4_edges_at_40s() {
        let g = build_graph(&s4(), 40.0);
        assert!(g.has_edge(Gbs(0), Gbs(1)));
        assert!(g.has_edge(U0, Gbs(2)));
        assert!(g.has_edge(UF, Gbs(2)));
        assert!(!g.has_edge(U0, UF));
        assert_eq!(g.weight(U0, Gbs(0)), 0.0);
        assert_eq!(g.weight(Gbs(0), Gbs(1)), 600.0);
    }

    #[test]
    fn s4_infeasible_at_10s() {
        assert!(!is_feasible(&build_graph(&s4(), 10.0)));
        assert!(shortest_weighted_path(&build_graph(&s4(), 10.0)).is_none());
        assert_eq!(enumerate_paths(&build_graph(&s4(), 10.0)).count(), 0);
    }

    #[test]
    fn dijkstra_examples() {
        let s = s4();
        assert_eq!(shortest_weighted_path(&build_graph(&s, 40.0)).unwrap().one_based(), vec![1, 2]);
        assert_eq!(shortest_weighted_path(&build_graph(&s, 20.0)).unwrap().one_based(), vec![1, 3, 2]);
    }

    #[test]
    fn enumeration_matches_brute_force_on_s4() {
        let g = build_graph(&s4(), 40.0);
        let got: Vec<Vec<usize>> = enumerate_paths(&g).map(|q| q.one_based()).collect();
        // Oracle: every permutation of every subset, kept if consecutive hops are edges.
        let mut expected = Vec::new();
        for perm in all_sequences(3) {
            let mut verts = vec![U0];
            verts.extend(perm.iter().map(|&m| Gbs(m)));
            verts.push(UF);
            if verts.windows(2).all(|w| g.has_edge(w[0], w[1])) {
                expected.push(perm.iter().map(|m| m + 1).collect::<Vec<_>>());
            }
        }
        let mut sorted = got.clone();
        sorted.sort();
        expected.sort();
        assert_eq!(sorted, expected);
        assert_eq!(got.len(), expected.len());
        // DFS order with ascending neighbors.
        assert_eq!(got[0], vec![1, 2, 3]);
    }

    fn all_sequences(m: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            for k in 0..m {
                if !cur.contains(&k) {
                    cur.push(k);
                    rec(m, cur, out);
                    cur.pop();
                }
            }
        }
        rec(m, &mut cur, &mut out);
        out
    }

    #[test]
    fn single_gbs_covering_both_endpoints() {
        let s = Scenario::with_radius(vec![p(0.0, 0.0)], p(-50.0, 0.0), p(50.0, 0.0), 100.0, 10.0).unwrap();
        let g = build_graph(&s, 0.0);
        assert!(is_feasible(&g));
        assert_eq!(shortest_weighted_path(&g).unwrap().one_based(), vec![1]);
        let all: Vec<_> = enumerate_paths(&g).map(|q| q.one_based()).collect();
        assert_eq!(all, vec![vec![1]]);
        assert_eq!(min_feasible_outage(&s, 1e-6), 0.0);
    }

    #[test]
    fn min_outage_s4() {
        let s = s4();
        let expected = (152_500f64.sqrt() - 200.0) / 10.0;
        let (exact, path) = bottleneck_outage(&s);
        assert!((exact - expected).abs() < 1e-12);
        assert_eq!(path.one_based(), vec![1, 3, 2]);
        let bis = min_feasible_outage(&s, 1e-6);
        assert!(bis >= expected && bis - expected <= 1e-6);
    }

    #[test]
    fn capped_enumeration_reports_truncation() {
        let g = build_graph(&s4(), 1e6);
        let full = enumerate_paths(&g).count();
        let capped = enumerate_paths_capped(&g, 2);
        assert_eq!(capped.paths.len(), 2);
        assert!(capped.truncated);
        let exact = enumerate_paths_capped(&g, full);
        assert!(!exact.truncated);
    }

    #[test]
    fn dot_output_lists_edges() {
        let dot = build_graph(&s4(), 20.0).to_dot();
        assert!(dot.contains("U0 -- G1"));
        assert!(dot.contains("G2 -- UF"));
        assert!(!dot.contains("G1 -- G2"));
    }
}
