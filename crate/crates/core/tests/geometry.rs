mod common;

use inspect_core::geometry::io::{parse_mesh, write_obj, write_stl_ascii, write_stl_binary};
use inspect_core::geometry::shapes::{icosphere, unit_cube};
use inspect_core::geometry::{MeshFormat, CLEARANCE_SLACK};
use inspect_core::oracle::{ray_cast_exhaustive, segment_mesh_distance};
use inspect_core::{Ray, TriangleMesh, Vec3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_rays_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mesh = common::random_mesh(&mut rng, 50);
    for _ in 0..100 {
        let o = common::random_point(&mut rng, -3.0, 3.0);
        let d = common::random_point(&mut rng, -1.0, 1.0);
        let Some(ray) = Ray::new(o, d, None) else { continue };
        let fast = mesh.ray_cast(&ray);
        let slow = ray_cast_exhaustive(&mesh, &ray);
        assert_eq!(fast.map(|h| (h.face, h.t)), slow.map(|h| (h.face, h.t)));
    }
}

#[test]
fn rays_aimed_at_faces_hit_the_nearest_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mesh = common::random_mesh(&mut rng, 80);
    for tri in mesh.triangles() {
        let o = common::random_point(&mut rng, -4.0, 4.0);
        let ray = Ray::towards(o, tri.centroid, None).unwrap();
        let hit = mesh.ray_cast(&ray).expect("aimed at a face");
        for (i, other) in mesh.triangles().iter().enumerate() {
            if let Some(t) = inspect_core::geometry::intersect_face(&ray, other) {
                assert!(t > hit.t || (t == hit.t && i >= hit.face));
            }
        }
    }
}

#[test]
fn segment_collision_matches_distance_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mesh = common::random_mesh(&mut rng, 30);
    let clearance = 0.3;
    let mut both = [0usize; 2];
    for _ in 0..200 {
        let a = common::random_point(&mut rng, -3.0, 3.0);
        let b = common::random_point(&mut rng, -3.0, 3.0);
        let d = segment_mesh_distance(&mesh, a, b);
        let hit = mesh.segment_collides(a, b, clearance);
        if d <= clearance {
            assert!(hit, "missed a collision at distance {d}");
        } else if d > clearance + CLEARANCE_SLACK + 1e-9 {
            assert!(!hit, "false collision at distance {d}");
        }
        both[hit as usize] += 1;
    }
    assert!(both[0] > 10 && both[1] > 10, "{both:?}");
}

#[test]
fn segment_above_cube_is_clear_and_through_it_is_not() {
    let cube = unit_cube();
    assert!(!cube.segment_collides(Vec3::new(-1.0, 0.5, 1.5), Vec3::new(2.0, 0.5, 1.5), 0.2));
    assert!(cube.segment_collides(Vec3::new(-1.0, 0.5, 0.5), Vec3::new(2.0, 0.5, 0.5), 0.0));
}

fn vertices(mesh: &TriangleMesh) -> Vec<[Vec3; 3]> {
    mesh.triangles().iter().map(|t| t.vertices).collect()
}

fn assert_close(a: &TriangleMesh, b: &TriangleMesh, tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in vertices(a).iter().zip(&vertices(b)) {
        for k in 0..3 {
            assert!(x[k].distance(y[k]) <= tol);
        }
    }
}

#[test]
fn save_and_load_round_trip_in_every_format() {
    let mesh = icosphere(Vec3::new(0.3, -1.2, 2.0), 1.7, 2);
    let mut buf = Vec::new();
    write_stl_ascii(&mesh, &mut buf).unwrap();
    assert_close(&mesh, &parse_mesh(&buf, MeshFormat::StlAscii).unwrap().mesh, 1e-6);
    buf.clear();
    write_stl_binary(&mesh, &mut buf).unwrap();
    assert_close(&mesh, &parse_mesh(&buf, MeshFormat::StlBinary).unwrap().mesh, 1e-6);
    buf.clear();
    write_obj(&mesh, &mut buf).unwrap();
    assert_close(&mesh, &parse_mesh(&buf, MeshFormat::Obj).unwrap().mesh, 1e-6);
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = unit_cube();
    for (name, fmt) in [("a.stl", MeshFormat::StlBinary), ("b.stl", MeshFormat::StlAscii), ("c.obj", MeshFormat::Obj)] {
        let path = dir.path().join(name);
        inspect_core::geometry::save_mesh(&mesh, &path, fmt).unwrap();
        let loaded = inspect_core::geometry::load_mesh_auto::<f64>(&path).unwrap();
        assert_eq!(loaded.dropped_faces, 0);
        assert_close(&mesh, &loaded.mesh, 1e-6);
        assert!((loaded.mesh.total_area() - 6.0).abs() < 1e-9);
    }
}

#[test]
fn single_precision_meshes_load_and_cast() {
    let mesh = unit_cube::<f32>();
    let ray = inspect_core::geometry::Ray::new(inspect_core::Vec3f::new(-1.0, 0.5, 0.5), inspect_core::Vec3f::new(1.0, 0.0, 0.0), None).unwrap();
    let hit = mesh.ray_cast(&ray).unwrap();
    assert!((hit.t - 1.0).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segment_collision_is_symmetric(
        seed in 0u64..1000,
        a in prop::array::uniform3(-3.0f64..3.0),
        b in prop::array::uniform3(-3.0f64..3.0),
        clearance in 0.0f64..0.5,
    ) {
        let mesh = common::random_mesh(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let (a, b) = (Vec3::new(a[0], a[1], a[2]), Vec3::new(b[0], b[1], b[2]));
        prop_assert_eq!(mesh.segment_collides(a, b, clearance), mesh.segment_collides(b, a, clearance));
    }

    #[test]
    fn ray_hit_is_minimal(
        seed in 0u64..1000,
        o in prop::array::uniform3(-3.0f64..3.0),
        d in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let mesh = common::random_mesh(&mut ChaCha8Rng::seed_from_u64(seed), 20);
        if let Some(ray) = Ray::new(Vec3::new(o[0], o[1], o[2]), Vec3::new(d[0], d[1], d[2]), None) {
            let fast = mesh.ray_cast(&ray).map(|h| (h.face, h.t));
            prop_assert_eq!(fast, ray_cast_exhaustive(&mesh, &ray).map(|h| (h.face, h.t)));
        }
    }

    #[test]
    fn ray_directions_are_unit(d in prop::array::uniform3(-10.0f64..10.0)) {
        if let Some(ray) = Ray::new(Vec3::zero(), Vec3::new(d[0], d[1], d[2]), None) {
            prop_assert!((ray.direction().norm() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn yaw_is_normalized(yaw in -100.0f64..100.0) {
        let c = inspect_core::Configuration::from_xyz(0.0, 0.0, 0.0, yaw);
        prop_assert!(c.yaw() >= -std::f64::consts::PI && c.yaw() < std::f64::consts::PI);
        prop_assert!(inspect_core::geometry::angle_diff(c.yaw(), yaw).abs() < 1e-9);
    }

    #[test]
    fn bounds_contain_every_vertex(seed in 0u64..1000) {
        let mesh = common::random_mesh(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        for t in mesh.triangles() {
            for v in t.vertices {
                prop_assert!(mesh.bounds().contains(v));
            }
            prop_assert!((t.normal.norm() - 1.0).abs() < 1e-9 && t.area > 0.0);
        }
    }
}
