mod common;

use proptest::prelude::*;
use rand::Rng;
use uav_outage::geometry::project_to_disk;
use uav_outage::graph::{
    bottleneck_outage, enumerate_paths, min_feasible_outage, shortest_weighted_path, Vertex, DEFAULT_BISECTION_TOL_S,
};
use uav_outage::planner::path_length_upper_bound;
use uav_outage::scenario::{closest_gbs, derive_coverage_radius};
use uav_outage::solver::check_plan;
use uav_outage::trajectory::audit_sampled;
use uav_outage::*;

use common::{all_sequences, p, random_scenario, rng, sequence_budget};

fn point() -> impl Strategy<Value = Point2> {
    (-2000.0..2000.0f64, -2000.0..2000.0f64).prop_map(|(x, y)| p(x, y))
}

fn params() -> impl Strategy<Value = ScenarioParams> {
    (
        prop::collection::vec(point(), 1..6),
        point(),
        point(),
        30.0..200.0f64,
        5.0..40.0f64,
        1.0..60.0f64,
        70.0..100.0f64,
        0.0..30.0f64,
        prop::option::of(10.0..2000.0f64),
    )
        .prop_map(|(gbs, u0, uf, h, hg, v, rho0, target, over)| {
            let mut ps = ScenarioParams::with_layout(gbs, u0, uf);
            ps.uav_altitude_m = h + hg;
            ps.gbs_height_m = hg;
            ps.v_max_mps = v;
            ps.ref_snr_db = rho0;
            ps.snr_target_db = target;
            ps.coverage_radius_override_m = over;
            ps
        })
}

fn world() -> impl Strategy<Value = Scenario> {
    (any::<u64>(), 1usize..=6).prop_map(|(seed, m)| random_scenario(&mut rng(seed), m))
}

fn random_order(m: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    let n = r.gen_range(1..=m);
    let mut pool: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    for _ in 0..n {
        out.push(pool.swap_remove(r.gen_range(0..pool.len())));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_json_round_trip(ps in params()) {
        if let Ok(s) = Scenario::new(ps) {
            let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn radius_shrinks_with_target(ps in params(), bump in 0.1..10.0f64) {
        let mut ps = ps;
        ps.coverage_radius_override_m = None;
        if let Ok(r) = derive_coverage_radius(&ps) {
            let mut harder = ps.clone();
            harder.snr_target_db += bump;
            let r2 = derive_coverage_radius(&harder).unwrap_or(0.0);
            prop_assert!(r2 < r);
        }
    }

    #[test]
    fn nearest_gbs_is_nearest(s in world(), q in point()) {
        let (m, d) = closest_gbs(q, &s);
        for (k, g) in s.gbs().iter().enumerate() {
            let e = q.dist(*g);
            prop_assert!(d <= e);
            if e == d {
                prop_assert!(m <= k);
            }
        }
    }

    #[test]
    fn projection_is_closest_disk_point(q in point(), c in point(), r in 1.0..500.0f64, a in 0.0..std::f64::consts::TAU, t in 0.0..1.0f64) {
        let d = uav_outage::scenario::CoverageDisk { center: c, radius: r };
        let proj = project_to_disk(q, &d);
        prop_assert!(proj.dist(c) <= r * (1.0 + 1e-12));
        let other = c + p(a.cos(), a.sin()) * (r * t);
        prop_assert!(proj.dist(q) <= other.dist(q) + 1e-9);
    }

    #[test]
    fn closed_form_outage_is_a_minimum(s in world(), seed in any::<u64>()) {
        let order = random_order(s.num_gbs(), seed);
        let seq = AssociationSequence::new(order, s.num_gbs()).unwrap();
        let v = min_outage_value(&seq, &s);
        let mut r = rng(seed ^ 0x5eed);
        let chain: Vec<Point2> = seq
            .indices()
            .iter()
            .flat_map(|&m| {
                let d = s.disk(m);
                let mut pick = || {
                    let a = r.gen_range(0.0..std::f64::consts::TAU);
                    let t: f64 = r.gen_range(0.0..1.0);
                    d.center + p(a.cos(), a.sin()) * (d.radius * t.sqrt())
                };
                [pick(), pick()]
            })
            .collect();
        let plan = WaypointPlan {
            sequence: seq.clone(),
            enter: chain.iter().step_by(2).copied().collect(),
            exit: chain.iter().skip(1).step_by(2).copied().collect(),
            start: s.u0(),
            finish: s.u_f(),
        };
        let worst_gap = plan.gap_lengths().into_iter().fold(0.0, f64::max) / s.v_max();
        prop_assert!(worst_gap >= v - 1e-9);
        let lemma = min_outage_waypoints(&seq, &s).unwrap();
        prop_assert!(check_plan(&lemma, &s, v).passes(1e-9));
    }

    #[test]
    fn edges_grow_with_budget(s in world(), a in 0.0..100.0f64, b in 0.0..100.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (g_lo, g_hi) = (build_graph(&s, lo), build_graph(&s, hi));
        for e in g_lo.edges() {
            prop_assert!(g_hi.has_edge(e.0, e.1));
        }
        prop_assert!(!g_hi.has_edge(Vertex::Start, Vertex::Finish));
    }

    #[test]
    fn feasibility_matches_exhaustive_search(s in world(), obar in 0.0..60.0f64) {
        let any = all_sequences(s.num_gbs()).iter().any(|q| sequence_budget(&s, q) <= obar);
        prop_assert_eq!(is_feasible(&build_graph(&s, obar)), any);
    }

    #[test]
    fn dijkstra_minimizes_surrogate(s in world(), obar in 0.0..60.0f64) {
        let g = build_graph(&s, obar);
        let best = enumerate_paths(&g)
            .map(|q| path_length_upper_bound(&q, &s))
            .fold(f64::INFINITY, f64::min);
        match shortest_weighted_path(&g) {
            Some(q) => prop_assert!((path_length_upper_bound(&q, &s) - best).abs() <= 1e-9 * best.max(1.0)),
            None => prop_assert!(best.is_infinite()),
        }
    }

    #[test]
    fn minimum_budget_three_ways(s in world()) {
        let exhaustive = all_sequences(s.num_gbs())
            .iter()
            .map(|q| sequence_budget(&s, q))
            .fold(f64::INFINITY, f64::min);
        let (bottleneck, seq) = bottleneck_outage(&s);
        let bisect = min_feasible_outage(&s, DEFAULT_BISECTION_TOL_S);
        prop_assert!((bottleneck - exhaustive).abs() <= 1e-9);
        prop_assert!((min_outage_value(&seq, &s) - exhaustive).abs() <= 1e-9);
        prop_assert!((bisect - exhaustive).abs() <= DEFAULT_BISECTION_TOL_S);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_bounds_and_budget_monotonicity(s in world(), seed in any::<u64>(), slack in 0.0..30.0f64) {
        let order = random_order(s.num_gbs(), seed);
        let seq = AssociationSequence::new(order, s.num_gbs()).unwrap();
        let cfg = SolverSettings::default();
        let base = min_outage_value(&seq, &s);
        let solve = |obar: f64| match solve_waypoints(&seq, &s, obar, &cfg) {
            Ok(r) => r,
            Err(Error::NonConvergence { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        let tight = solve(base + slack);
        let loose = solve(base + slack + 10.0);
        for r in [&tight, &loose] {
            prop_assert!(r.objective_m >= s.straight_distance() - 1e-9);
            prop_assert!(r.objective_m <= path_length_upper_bound(&seq, &s) + 1e-6);
        }
        prop_assert!(check_plan(&tight.plan, &s, base + slack).passes(cfg.feas_tol_m));
        let tol = cfg.tol_rel * tight.objective_m + tight.gap_m;
        prop_assert!(loose.objective_m <= tight.objective_m + tol);
        if base * s.v_max() > 1.0 {
            let below = solve_waypoints(&seq, &s, base * 0.5, &cfg);
            let rejected = matches!(below, Err(Error::Infeasible { .. }));
            prop_assert!(rejected);
        }
    }

    #[test]
    fn planners_are_ordered(s in world(), obar in 0.0..60.0f64) {
        let cfg = PlannerConfig::default();
        match plan_optimal(&s, obar, &cfg) {
            Ok(opt) => {
                let sub = plan_suboptimal(&s, obar, &cfg).unwrap();
                prop_assert!(sub.objective_m >= opt.objective_m * (1.0 - 1e-6));
                prop_assert!(opt.objective_m >= s.straight_distance() - 1e-9);
                prop_assert!(opt.max_outage_s <= obar + cfg.solver.feas_tol_m / s.v_max());
                prop_assert!((opt.completion_time_s * s.v_max() - opt.objective_m).abs() <= 1e-9 * opt.objective_m);
            }
            Err(e) => {
                prop_assert!(e.is_infeasible());
                prop_assert!(!is_feasible(&build_graph(&s, obar)));
            }
        }
    }

    #[test]
    fn exact_and_sampled_audits_agree(s in world(), seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let mut pts = vec![s.u0()];
        for _ in 0..n {
            pts.push(p(r.gen_range(-200.0..1200.0), r.gen_range(-200.0..1200.0)));
        }
        pts.push(s.u_f());
        let traj = Trajectory::from_polyline(&pts, s.v_max());
        let dt = 1e-3 * traj.duration();
        let report = audit_outage(&traj, &s);
        // Sampling cannot see covered stretches shorter than its step.
        prop_assume!(report.intervals.windows(2).all(|w| w[1].0 - w[0].1 > 2.0 * dt));
        let exact = report.max_outage_s;
        let sampled = audit_sampled(&traj, &s, dt).max_outage_s;
        prop_assert!((exact - sampled).abs() <= dt + 1e-9, "{} vs {}", exact, sampled);
    }
}
