use inspect_core::geometry::shapes::{open_box, unit_cube};
use inspect_core::inspection::coverage;
use inspect_core::rrtot::{extract_best_tour, plan_optimal_inspection, Forest, RrtotParams, RrtotResult, Scene};
use inspect_core::search::{FreeSpace, MeshSpace};
use inspect_core::sensor::SensorModel;
use inspect_core::vehicle::VehicleModel;
use inspect_core::{Configuration, TriangleMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn wide_sensor() -> SensorModel {
    SensorModel {
        vfov: 90f64.to_radians(),
        ..SensorModel::default()
    }
}

fn check_tour(r: &RrtotResult, mesh: &TriangleMesh, sensor: &SensorModel, vehicle: &VehicleModel) {
    assert_eq!(coverage(sensor, mesh, &r.path.viewpoints), (0..mesh.len()).collect::<Vec<_>>());
    assert_eq!(r.path.covered, (0..mesh.len()).collect::<Vec<_>>());
    assert!((r.path.recomputed_cost() - r.path.cost).abs() < 1e-6);
    assert!(r.history.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
    assert_eq!(r.history.last().unwrap().1, r.path.cost);
    let space = MeshSpace::new(mesh, vehicle.clearance);
    for leg in r.path.legs.iter().flat_map(|p| p.legs.iter()) {
        assert!(space.path_free(leg));
    }
    // the legs chain into a closed walk through the viewpoints
    let n = r.path.viewpoints.len();
    for (k, leg) in r.path.legs.iter().enumerate() {
        assert_eq!(leg.configurations.first(), Some(&r.path.viewpoints[k]));
        assert_eq!(leg.configurations.last(), Some(&r.path.viewpoints[(k + 1) % n]));
    }
}

#[test]
fn vertex_coverage_matches_recomputation() {
    let cube = unit_cube();
    let sensor = wide_sensor();
    let vehicle = VehicleModel::default();
    let scene = Scene {
        world: &cube,
        structure_faces: 12,
        sensor: &sensor,
        vehicle: &vehicle,
    };
    let start = Configuration::from_xyz(2.5, 0.5, 0.5, std::f64::consts::PI);
    let mut forest = Forest::new(&scene, start, cube.bounds().inflate(1.5));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let added = forest.grow(&scene, &RrtotParams::default(), 1500, &mut rng);
    assert_eq!(forest.vertex_count(), added + 1);
    let ids: Vec<_> = forest.vertices().collect();
    for _ in 0..50 {
        let v = ids[rng.gen_range(0..ids.len())];
        let c = forest.config(v);
        let expect: Vec<usize> = sensor.visible_set(&c, &cube);
        let got: Vec<usize> = forest.coverage[v.tree][v.node].ones().collect();
        assert_eq!(got, expect);
        assert!(!cube.segment_collides(c.position, c.position, vehicle.clearance));
    }
    for (t, tree) in forest.trees.iter().enumerate().skip(1) {
        let o = forest.origins[t].unwrap();
        assert!(o.tree < t);
        assert_eq!(*tree.root(), forest.config(o));
    }
    let tour = extract_best_tour(&forest, &scene, &RrtotParams::default(), &mut rng);
    if let Some(p) = tour {
        assert_eq!(coverage(&sensor, &cube, &p.viewpoints).len(), 12);
    }
}

#[test]
fn open_box_is_covered_with_monotone_history() {
    let mesh = open_box(Vec3::zero(), Vec3::new(2.0, 1.0, 0.6));
    assert_eq!(mesh.len(), 6);
    let sensor = wide_sensor();
    let vehicle = VehicleModel::default();
    let params = RrtotParams {
        iterations: 6000,
        ..RrtotParams::default()
    };
    let start = Configuration::from_xyz(1.0, -1.5, 0.8, std::f64::consts::FRAC_PI_2);
    let r = plan_optimal_inspection(&mesh, &sensor, &vehicle, None, start, &params, 5).unwrap();
    check_tour(&r, &mesh, &sensor, &vehicle);
}

#[test]
fn same_seed_same_tour() {
    let cube = unit_cube();
    let sensor = wide_sensor();
    let params = RrtotParams {
        iterations: 3000,
        ..RrtotParams::default()
    };
    let start = Configuration::from_xyz(2.5, 0.5, 0.5, std::f64::consts::PI);
    let a = plan_optimal_inspection(&cube, &sensor, &VehicleModel::default(), None, start, &params, 9).unwrap();
    let b = plan_optimal_inspection(&cube, &sensor, &VehicleModel::default(), None, start, &params, 9).unwrap();
    assert_eq!(a, b);
    check_tour(&a, &cube, &sensor, &VehicleModel::default());
}
