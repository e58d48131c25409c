mod common;

use inspect_core::geometry::shapes::wall_with_gap;
use inspect_core::search::{plan_point_to_point, try_direct, FreeSpace, MeshSpace, SearchParams, SearchTree};
use inspect_core::vehicle::VehicleModel;
use inspect_core::{Aabb, Configuration, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shortest path in the plane z = const from `a` to `b` around the lower
/// jamb of the gap, both wall corners grown by the clearance.
fn taut_string(a: (f64, f64), b: (f64, f64), x0: f64, half_thickness: f64, jamb: f64, clearance: f64) -> f64 {
    let c1 = (x0 - half_thickness, jamb + clearance);
    let c2 = (x0 + half_thickness, jamb + clearance);
    let d = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1);
    d(a, c1) + d(c1, c2) + d(c2, b)
}

#[test]
fn path_through_gap_is_near_taut_string() {
    let v = VehicleModel::default();
    let wall = wall_with_gap(2.0, 0.1, (-6.0, 6.0), (0.0, 3.0), 1.5, 1.0);
    let space = MeshSpace::new(&wall, v.clearance);
    let a = Configuration::from_xyz(0.0, -1.0, 1.5, 0.0);
    let b = Configuration::from_xyz(4.0, -1.0, 1.5, 0.0);
    assert!(try_direct(&v, &space, &a, &b).is_none());
    let params = SearchParams {
        max_iterations: 6000,
        bounds: Some(Aabb::new(Vec3::new(-0.5, -3.0, 1.3), Vec3::new(4.5, 3.0, 1.7))),
        ..SearchParams::default()
    };
    let taut = taut_string((0.0, -1.0), (4.0, -1.0), 2.0, 0.05, 1.0, v.clearance) / v.v_max;
    for seed in 0..3 {
        let p = plan_point_to_point(&v, &space, &a, &b, &params, seed).unwrap();
        assert!(p.cost <= 1.2 * taut, "seed {seed}: {} vs {}", p.cost, taut);
        assert!(p.cost >= taut * 0.999);
        let through_gap = p.legs.iter().flat_map(|l| l.waypoints.iter()).any(|w| (w.position.x - 2.0).abs() < 0.05 && w.position.y > 1.0 && w.position.y < 2.0);
        assert!(through_gap);
        for leg in &p.legs {
            for w in leg.waypoints.windows(2) {
                assert!(!wall.segment_collides(w[0].position, w[1].position, v.clearance));
            }
        }
    }
}

#[test]
fn planning_agrees_with_direct_connection() {
    let v = VehicleModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..8 {
        let a = common::random_config(&mut rng, -2.0, 2.0);
        let b = common::random_config(&mut rng, -2.0, 2.0);
        let direct = try_direct(&v, &MeshSpace::empty(), &a, &b).unwrap();
        let p = plan_point_to_point(&v, &MeshSpace::empty(), &a, &b, &SearchParams::default(), seed).unwrap();
        assert!(p.cost <= 1.05 * direct.cost + 1e-9, "{} vs {}", p.cost, direct.cost);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn larger_budget_never_costs_more(seed in 0u64..1000) {
        let v = VehicleModel::default();
        let wall = wall_with_gap(2.0, 0.1, (-6.0, 6.0), (0.0, 3.0), 1.5, 1.0);
        let space = MeshSpace::new(&wall, v.clearance);
        let a = Configuration::from_xyz(0.0, -1.0, 1.5, 0.0);
        let b = Configuration::from_xyz(4.0, -1.0, 1.5, 0.0);
        let mut last = f64::INFINITY;
        for iterations in [800, 1600, 3200] {
            let params = SearchParams {
                max_iterations: iterations,
                bounds: Some(Aabb::new(Vec3::new(-0.5, -3.0, 1.3), Vec3::new(4.5, 3.0, 1.7))),
                ..SearchParams::default()
            };
            if let Ok(p) = plan_point_to_point(&v, &space, &a, &b, &params, seed) {
                prop_assert!(p.cost <= last + 1e-9);
                last = p.cost;
            } else {
                prop_assert!(last.is_infinite());
            }
        }
    }

    #[test]
    fn tree_costs_are_consistent(seed in 0u64..1000, nonholonomic: bool) {
        let v = if nonholonomic { VehicleModel::nonholonomic(0.5, 1.0) } else { VehicleModel::default() };
        let bounds = Aabb::new(Vec3::splat(-2.0), Vec3::splat(2.0));
        let obstacle = inspect_core::geometry::shapes::box_mesh(Vec3::new(-0.5, -0.5, -2.0), Vec3::new(0.5, 0.5, 2.0));
        let space = MeshSpace::new(&obstacle, v.clearance);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tree = SearchTree::new(Configuration::from_xyz(-1.5, -1.5, 0.0, 0.0), bounds);
        for _ in 0..150 {
            let s = Configuration::new(common::random_point(&mut rng, -2.0, 2.0), rng.gen_range(-3.0..3.0));
            tree.extend(s, &v, &space, 1.0);
        }
        prop_assert_eq!(tree.nodes[0].cost, 0.0);
        for (i, n) in tree.nodes.iter().enumerate().skip(1) {
            let p = n.parent.unwrap();
            let edge = v.connect(&tree.nodes[p].config, &n.config).unwrap();
            prop_assert!(space.path_free(&edge));
            prop_assert!((n.edge_cost - edge.cost).abs() < 1e-9);
            prop_assert!((n.cost - tree.nodes[p].cost - n.edge_cost).abs() < 1e-9);
            // walking up reaches the root within |nodes| steps
            let mut at = i;
            let mut hops = 0;
            while let Some(up) = tree.nodes[at].parent {
                at = up;
                hops += 1;
                prop_assert!(hops <= tree.nodes.len());
            }
            prop_assert_eq!(at, 0);
        }
    }
}
