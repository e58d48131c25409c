mod common;

use inspect_core::geometry::shapes::{icosphere, room};
use inspect_core::oracle::{face_visible_exhaustive, ray_cast_exhaustive, visible_set_exhaustive};
use inspect_core::sensor::SensorModel;
use inspect_core::{Configuration, Ray, TriangleMesh, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_visibility_queries_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sensor = SensorModel::default();
    let mut visible = 0;
    for _ in 0..40 {
        let mesh = common::random_mesh(&mut rng, 40);
        for _ in 0..10 {
            let c = common::random_config(&mut rng, -3.0, 3.0);
            let set = sensor.visible_set(&c, &mesh);
            assert_eq!(set, visible_set_exhaustive(&sensor, &c, &mesh));
            visible += set.len();
            let f = rng.gen_range(0..mesh.len());
            assert_eq!(sensor.face_visible(&c, &mesh, f), face_visible_exhaustive(&sensor, &c, &mesh, f));
        }
    }
    assert!(visible > 100, "queries too easy: {visible} visible faces");
}

#[test]
fn sphere_inside_room_matches_oracle() {
    let world = room(Vec3::zero(), Vec3::new(6.0, 6.0, 3.0)).merged(&icosphere(Vec3::new(3.0, 3.0, 1.5), 0.8, 2));
    let sensor = SensorModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let c = Configuration::new(
            Vec3::new(rng.gen_range(0.2..5.8), rng.gen_range(0.2..5.8), rng.gen_range(0.2..2.8)),
            rng.gen_range(-3.1..3.1),
        );
        assert_eq!(sensor.visible_set(&c, &world), visible_set_exhaustive(&sensor, &c, &world));
    }
}

#[test]
fn room_scan_matches_per_ray_cast() {
    let world = room(Vec3::zero(), Vec3::new(4.0, 4.0, 2.0));
    let sensor = SensorModel::default();
    let c = Configuration::from_xyz(1.0, 2.0, 1.0, 0.3);
    let hits = sensor.simulate_scan(&c, Some(&world), 16, 12);
    let dirs = sensor.scan_directions(&c, 16, 12);
    assert_eq!(hits.len(), dirs.len());
    for (h, d) in hits.iter().zip(dirs) {
        let ray = Ray::new(c.position, d, Some(sensor.d_max)).unwrap();
        assert_eq!(*h, ray_cast_exhaustive(&world, &ray).map(|x| x.point));
    }
}

#[test]
fn empty_world_scan_misses() {
    let sensor = SensorModel::default();
    let c = Configuration::from_xyz(0.0, 0.0, 0.0, 0.0);
    assert!(sensor.simulate_scan(&c, None, 4, 3).iter().all(Option::is_none));
}

fn blocker(at: Vec3) -> TriangleMesh {
    TriangleMesh::from_vertex_triples([[at, at + Vec3::new(0.0, 1.0, 0.0), at + Vec3::new(0.0, 0.0, 1.0)]])
        .unwrap()
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn full_turn_keeps_visible_set(seed in 0u64..10_000, turns in -3i32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = common::random_mesh(&mut rng, 30);
        let c = common::random_config(&mut rng, -3.0, 3.0);
        let turned = Configuration::new(c.position, c.yaw() + turns as f64 * std::f64::consts::TAU);
        let sensor = SensorModel::default();
        prop_assert_eq!(sensor.visible_set(&c, &mesh), sensor.visible_set(&turned, &mesh));
    }

    #[test]
    fn visible_faces_lie_in_range_band(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = common::random_mesh(&mut rng, 30);
        let c = common::random_config(&mut rng, -3.0, 3.0);
        let sensor = SensorModel::default();
        for f in sensor.visible_set(&c, &mesh) {
            let d = mesh.face(f).centroid.distance(c.position);
            prop_assert!(d >= sensor.d_min && d <= sensor.d_max);
        }
    }

    #[test]
    fn adding_a_blocker_never_enlarges_visible_set(seed in 0u64..10_000, at in prop::array::uniform3(-2.0f64..2.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = common::random_mesh(&mut rng, 30);
        let c = common::random_config(&mut rng, -3.0, 3.0);
        let sensor = SensorModel::default();
        let before = sensor.visible_set(&c, &mesh);
        let with = mesh.merged(&blocker(Vec3::new(at[0], at[1], at[2])));
        let after: Vec<usize> = sensor.visible_set(&c, &with).into_iter().filter(|&f| f < mesh.len()).collect();
        prop_assert!(after.iter().all(|f| before.contains(f)));
    }
}
