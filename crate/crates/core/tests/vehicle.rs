mod common;

use inspect_core::geometry::angle_diff;
use inspect_core::oracle::dubins_csc_numeric;
use inspect_core::vehicle::dubins::DubinsPath;
use inspect_core::vehicle::{VehicleModel, WAYPOINT_SPACING};
use inspect_core::{Configuration, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn straight_ahead_matches_numeric_search() {
    let v = VehicleModel::nonholonomic(0.25, 0.5);
    let a = Configuration::from_xyz(0.0, 0.0, 1.0, 0.0);
    let b = Configuration::from_xyz(10.0, 0.0, 1.0, 0.0);
    let cost = v.connect_cost(&a, &b).unwrap();
    assert!((cost - 40.0).abs() < 1e-9);
    let numeric = dubins_csc_numeric((0.0, 0.0, 0.0), (10.0, 0.0, 0.0), v.turn_radius());
    assert!((numeric - 10.0).abs() < 1e-6);
}

#[test]
fn far_apart_dubins_lengths_match_numeric_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..25 {
        let r = rng.gen_range(0.2..1.5);
        let start = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-3.1..3.1));
        let ang: f64 = rng.gen_range(-3.1..3.1);
        let d = rng.gen_range(4.2 * r..10.0 * r);
        let goal = (start.0 + d * ang.cos(), start.1 + d * ang.sin(), rng.gen_range(-3.1..3.1));
        let fast = DubinsPath::shortest(start, goal, r).unwrap().length();
        let slow = dubins_csc_numeric(start, goal, r);
        assert!((fast - slow).abs() < 1e-6 * (1.0 + slow), "{fast} vs {slow}");
    }
}

#[test]
fn random_path_cost_is_sum_of_connections() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for v in [VehicleModel::holonomic(0.25, 0.5), VehicleModel::nonholonomic(0.5, 0.8)] {
        let path: Vec<Configuration> = (0..5).map(|_| common::random_config(&mut rng, -3.0, 3.0)).collect();
        let total: f64 = path.windows(2).map(|w| v.connect(&w[0], &w[1]).unwrap().cost).sum();
        assert!((v.path_cost(&path) - total).abs() < 1e-9);
    }
    assert_eq!(VehicleModel::default().path_cost(&[Configuration::default()]), 0.0);
}

fn cfg(p: [f64; 4]) -> Configuration {
    Configuration::from_xyz(p[0], p[1], p[2], p[3])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holonomic_cost_is_symmetric(a in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform4(-3.0f64..3.0)) {
        let v = VehicleModel::holonomic(0.25, 0.5);
        let (a, b) = (cfg(a), cfg(b));
        prop_assert!((v.connect_cost(&a, &b).unwrap() - v.connect_cost(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dubins_cost_bounds_distance(a in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform4(-3.0f64..3.0)) {
        let v = VehicleModel::nonholonomic(0.4, 0.5);
        let (a, b) = (cfg(a), cfg(b));
        if let Some(c) = v.connect_cost(&a, &b) {
            prop_assert!(c * v.v_max >= a.position.horizontal_distance(b.position) - 1e-9);
            prop_assert!(c * v.v_max >= a.position.distance(b.position) - 1e-9);
        }
    }

    #[test]
    fn waypoints_are_dense_and_anchored(a in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform4(-3.0f64..3.0), nonholonomic: bool) {
        let v = if nonholonomic { VehicleModel::nonholonomic(0.4, 0.5) } else { VehicleModel::holonomic(0.25, 0.5) };
        let (a, b) = (cfg(a), cfg(b));
        if let Some(p) = v.connect(&a, &b) {
            prop_assert_eq!(p.waypoints[0], a);
            prop_assert_eq!(*p.waypoints.last().unwrap(), b);
            for w in p.waypoints.windows(2) {
                prop_assert!(w[0].position.distance(w[1].position) <= WAYPOINT_SPACING + 1e-9);
            }
            prop_assert!(p.cost > 0.0 || (a.position == b.position && angle_diff(a.yaw(), b.yaw()) == 0.0));
            prop_assert!((p.cost - v.connect_cost(&a, &b).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn dubins_headings_follow_the_tangent(a in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform4(-3.0f64..3.0)) {
        let v = VehicleModel::nonholonomic(0.4, 0.5);
        let (a, b) = (cfg(a), cfg(b));
        if let Some(p) = v.connect(&a, &b) {
            for w in p.waypoints.windows(2) {
                let d = w[1].position - w[0].position;
                let h = Vec3::new(d.x, d.y, 0.0);
                if h.norm() > 1e-3 {
                    let travel = h.y.atan2(h.x);
                    prop_assert!(angle_diff(travel, w[0].yaw()).abs() < 0.2);
                }
            }
        }
    }
}
