mod common;

use rideshare_core::optimize::OptimizeError;
use rideshare_core::{evaluate_design, optimize, DesignVars, OptimizerConfig, Scenario};

fn small(seed: u64, workers: usize) -> OptimizerConfig {
    OptimizerConfig { multistarts: 3, max_iters: 6, seed, workers, ..Default::default() }
}

fn pair_sums_hold(sc: &Scenario, d: &DesignVars) {
    let g = sc.grid();
    for i in g.zone_ids() {
        for j in g.zone_ids().filter(|&j| j != i) {
            let s: f64 = g.feasible_next_zones(i, j).unwrap().iter().map(|&n| d.fraction(g, i, j, n)).sum();
            assert!((s - 1.0).abs() <= 1e-12, "{i}->{j} fractions sum to {s}");
        }
    }
    d.validate(g).unwrap();
}

#[test]
fn same_seed_same_report() {
    let sc = common::scenario("s1");
    let a = serde_json::to_string(&optimize(&sc, &small(7, 1)).unwrap().to_report(&sc)).unwrap();
    let b = serde_json::to_string(&optimize(&sc, &small(7, 1)).unwrap().to_report(&sc)).unwrap();
    let c = serde_json::to_string(&optimize(&sc, &small(7, 3)).unwrap().to_report(&sc)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c, "worker count must not change the result");
}

#[test]
fn trace_is_monotone_and_best_is_reported() {
    let sc = common::scenario("s2");
    let r = optimize(&sc, &small(3, 2)).unwrap();
    let z = r.best_report.cost_per_pax;
    for s in 0..3 {
        let entries: Vec<_> = r.trace.iter().filter(|t| t.start == s).collect();
        assert!(!entries.is_empty());
        for w in entries.windows(2) {
            assert!(w[1].best_z <= w[0].best_z, "start {s}: best Z rose");
        }
    }
    for t in r.trace.iter().filter(|t| t.feasible) {
        assert!(z <= t.z * (1.0 + 1e-12), "trace entry {} beats reported {}", t.z, z);
    }
    pair_sums_hold(&sc, &r.best_design);
    let upper = rideshare_core::optimize::idle_heuristic(&sc);
    for (n, u) in r.best_design.n_idle.iter().zip(&upper) {
        assert!(*n >= 0.0 && *n <= 10.0 * u + 1e-12);
    }
}

#[test]
fn explicit_bounds_are_respected() {
    let sc = common::scenario("s3");
    let cfg = OptimizerConfig { idle_upper: Some(vec![2.0, 30.0, 30.0, 2.0]), ..small(1, 1) };
    let r = optimize(&sc, &cfg).unwrap();
    for (n, u) in r.best_design.n_idle.iter().zip([2.0, 30.0, 30.0, 2.0]) {
        assert!(*n <= u);
    }
    pair_sums_hold(&sc, &r.best_design);
}

#[test]
fn reflection_symmetric_demand() {
    // S3 demand is symmetric under the reflection that swaps the NE and SW
    // zones and fixes the NW–SE diagonal.
    let sc = common::scenario("s3");
    let map = [0, 2, 1, 3];
    let cfg = OptimizerConfig { multistarts: 2, max_iters: 30, workers: 2, ..Default::default() };
    let r = optimize(&sc, &cfg).unwrap();
    let mirrored = r.best_design.relabel(sc.grid(), &map);
    pair_sums_hold(&sc, &mirrored);
    let z = r.best_report.cost_per_pax;
    let zm = evaluate_design(&sc, &mirrored, None).unwrap().z;
    assert!((z - zm).abs() <= 0.01 * z, "Z {z} vs mirrored {zm}");
}

#[test]
fn zero_idle_bounds_are_rejected() {
    let sc = common::scenario("s1");
    let cfg = OptimizerConfig { idle_upper: Some(vec![0.0, 5.0, 5.0, 5.0]), ..small(1, 1) };
    assert!(matches!(optimize(&sc, &cfg), Err(OptimizeError::Config(_))));
}
