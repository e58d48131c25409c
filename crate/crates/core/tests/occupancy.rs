mod common;

use inspect_core::geometry::shapes::room;
use inspect_core::occupancy::{MapParams, OccupancyMap, ScanRay, VoxelState};
use inspect_core::oracle::{count_unknown_visible_exhaustive, line_of_sight_exhaustive};
use inspect_core::sensor::SensorModel;
use inspect_core::{Aabb, Configuration, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scan(map: &mut OccupancyMap, world: &inspect_core::TriangleMesh, sensor: &SensorModel, c: &Configuration, h: usize, v: usize) {
    let dirs = sensor.scan_directions(c, h, v);
    let hits = sensor.simulate_scan(c, Some(world), h, v);
    let rays: Vec<ScanRay> = dirs.into_iter().zip(hits).map(|(direction, hit)| ScanRay { direction, hit }).collect();
    map.integrate_scan(c.position, &rays, sensor.d_max).unwrap();
}

#[test]
fn fresh_map_frustum_count_matches_volume() {
    let sensor = SensorModel {
        d_min: 0.35,
        d_max: 2.0,
        ..SensorModel::default()
    };
    let r = 0.05;
    let map = OccupancyMap::new(MapParams::new(r, Aabb::new(Vec3::splat(-2.5), Vec3::splat(2.5)))).unwrap();
    let c = Configuration::from_xyz(0.013, -0.021, 0.007, 0.4);
    let (a, b) = (sensor.hfov / 2.0, sensor.vfov / 2.0);
    let solid_angle = 4.0 * (a.sin() * b.sin()).asin();
    let volume = solid_angle * (sensor.d_max.powi(3) - sensor.d_min.powi(3)) / 3.0;
    let expected = volume / r.powi(3);
    let n = map.count_unknown_visible(&c, &sensor) as f64;
    assert!((n / expected - 1.0).abs() < 0.05, "{n} vs {expected}");
}

#[test]
fn closed_box_scan_classifies_against_ground_truth() {
    let world = room(Vec3::zero(), Vec3::new(4.0, 4.0, 2.0));
    let params = MapParams::new(0.2, Aabb::new(Vec3::splat(-0.3), Vec3::new(4.3, 4.3, 2.3)));
    let mut map = OccupancyMap::new(params).unwrap();
    let sensor = SensorModel {
        hfov: 90f64.to_radians(),
        vfov: 170f64.to_radians(),
        pitch: 0.0,
        d_max: 6.0,
        ..SensorModel::default()
    };
    for k in 0..4 {
        let c = Configuration::from_xyz(2.03, 1.97, 1.01, k as f64 * std::f64::consts::FRAC_PI_2);
        scan(&mut map, &world, &sensor, &c, 160, 300);
    }
    let interior = Aabb::new(Vec3::zero(), Vec3::new(4.0, 4.0, 2.0));
    let half = Vec3::splat(0.1);
    let [nx, ny, nz] = map.dims();
    let (mut inner, mut inner_free, mut walls, mut walls_occ) = (0, 0, 0, 0);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let k = [x, y, z];
                let c = map.center_of(k);
                let cell = Aabb::new(c - half, c + half);
                let state = map.state(k);
                if interior.contains_box(&cell) {
                    inner += 1;
                    inner_free += (state == VoxelState::Free) as usize;
                    assert_ne!(state, VoxelState::Occupied, "{k:?}");
                } else if interior.contains(c) || interior.inflate(0.1).contains(c) {
                    walls += 1;
                    walls_occ += (state == VoxelState::Occupied) as usize;
                } else {
                    assert_eq!(state, VoxelState::Unknown, "exterior voxel {k:?} observed");
                }
            }
        }
    }
    assert_eq!(inner_free, inner);
    assert!(walls_occ as f64 >= 0.95 * walls as f64, "{walls_occ}/{walls}");
}

#[test]
fn line_of_sight_matches_slab_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = MapParams::new(0.25, Aabb::new(Vec3::zero(), Vec3::splat(3.0)));
    let mut map = OccupancyMap::new(params).unwrap();
    // scatter occupied voxels by repeated hits
    for _ in 0..60 {
        let p = common::random_point(&mut rng, 0.3, 2.7);
        let origin = Vec3::splat(1.5);
        for _ in 0..3 {
            let _ = map.integrate_scan(origin, &[ScanRay { direction: p - origin, hit: Some(p) }], 10.0);
        }
    }
    let mut blocked = 0;
    for _ in 0..2000 {
        let from = common::random_point(&mut rng, 0.01, 2.99);
        let target = map.raw_key(common::random_point(&mut rng, 0.01, 2.99));
        let fast = map.line_of_sight(from, target);
        assert_eq!(fast, line_of_sight_exhaustive(&map, from, target), "{from:?} -> {target:?}");
        blocked += (!fast) as usize;
    }
    assert!(blocked > 50, "only {blocked} blocked lines");
}

#[test]
fn unknown_count_behind_wall_matches_exhaustive_oracle() {
    let world = room(Vec3::zero(), Vec3::new(2.0, 2.0, 2.0));
    let params = MapParams::new(0.2, Aabb::new(Vec3::splat(-0.1), Vec3::new(4.1, 2.1, 2.1)));
    let mut map = OccupancyMap::new(params).unwrap();
    let sensor = SensorModel::default();
    let c = Configuration::from_xyz(0.5, 1.0, 1.0, 0.0);
    scan(&mut map, &world, &sensor, &c, 48, 32);
    let probe = Configuration::from_xyz(0.6, 1.1, 1.0, 0.2);
    let n = map.count_unknown_visible(&probe, &sensor);
    assert_eq!(n, count_unknown_visible_exhaustive(&map, &probe, &sensor));
    // nothing beyond the far wall at x = 2 is countable
    let mut beyond = 0;
    map.for_each_visible(&probe, &sensor, |s| s == VoxelState::Unknown, |k, _| beyond += (map.center_of(k).x > 2.2) as usize);
    assert_eq!(beyond, 0);
}

#[test]
fn fully_known_map_has_no_unknown_in_view() {
    let params = MapParams::new(0.5, Aabb::new(Vec3::zero(), Vec3::splat(2.0)));
    let mut map = OccupancyMap::new(params).unwrap();
    let o = Vec3::splat(1.01);
    let rays: Vec<ScanRay> = (0..4000)
        .map(|i| {
            let t = i as f64 * 0.618_034 * std::f64::consts::TAU;
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / 4000.0;
            let r = (1.0 - z * z).sqrt();
            ScanRay { direction: Vec3::new(r * t.cos(), r * t.sin(), z), hit: None }
        })
        .collect();
    map.integrate_scan(o, &rays, 5.0).unwrap();
    assert_eq!(map.known_fraction(map.bounds()), 1.0);
    assert_eq!(map.count_unknown_visible(&Configuration::new(o, 0.3), &SensorModel::default()), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scans_never_lower_counts_or_visible_unknowns(seed in 0u64..10_000, scans in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world = room(Vec3::zero(), Vec3::new(3.0, 3.0, 2.0));
        let params = MapParams::new(0.25, Aabb::new(Vec3::splat(-0.1), Vec3::new(3.1, 3.1, 2.1)));
        let mut map = OccupancyMap::new(params).unwrap();
        let sensor = SensorModel::default();
        let fixed = Configuration::from_xyz(1.5, 1.5, 1.0, rng.gen_range(-3.0..3.0));
        let mut last = map.count_unknown_visible(&fixed, &sensor);
        for _ in 0..scans {
            let before: Vec<_> = map.observed_voxels();
            let c = Configuration::from_xyz(rng.gen_range(0.3..2.7), rng.gen_range(0.3..2.7), rng.gen_range(0.3..1.7), rng.gen_range(-3.0..3.0));
            scan(&mut map, &world, &sensor, &c, 12, 8);
            for (k, l, n) in before {
                let (l2, n2) = map.voxel(k).unwrap();
                prop_assert!(n2 >= n);
                prop_assert!((params.clamp_min..=params.clamp_max).contains(&l2) && (params.clamp_min..=params.clamp_max).contains(&l));
            }
            let now = map.count_unknown_visible(&fixed, &sensor);
            prop_assert!(now <= last);
            last = now;
        }
        for (k, l, _) in map.observed_voxels() {
            let expect = if l > params.occupied_log_odds() { VoxelState::Occupied } else { VoxelState::Free };
            prop_assert_eq!(map.state(k), expect);
        }
    }
}
