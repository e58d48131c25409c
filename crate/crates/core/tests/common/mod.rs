#![allow(dead_code)]

use inspect_core::{Configuration, Triangle, TriangleMesh, Vec3};
use rand::Rng;

pub fn random_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Vec3 {
    Vec3::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

/// Random triangle soup inside `[-2, 2]^3` with edges up to about one meter.
pub fn random_mesh<R: Rng>(rng: &mut R, faces: usize) -> TriangleMesh {
    let mut tris = Vec::with_capacity(faces);
    while tris.len() < faces {
        let c = random_point(rng, -2.0, 2.0);
        let a = c + random_point(rng, -0.6, 0.6);
        let b = c + random_point(rng, -0.6, 0.6);
        let d = c + random_point(rng, -0.6, 0.6);
        if let Some(t) = Triangle::new(a, b, d) {
            tris.push(t);
        }
    }
    TriangleMesh::from_triangles(tris).unwrap()
}

pub fn random_config<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Configuration {
    Configuration::new(random_point(rng, lo, hi), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

pub mod scenarios {
    use inspect_core::belief::Landmark;
    use inspect_core::contact::{Point2, SurfaceTask};
    use inspect_core::geometry::shapes::{box_mesh, room};
    use inspect_core::nbv::sense;
    use inspect_core::occupancy::{MapParams, OccupancyMap};
    use inspect_core::search::SearchParams;
    use inspect_core::sensor::SensorModel;
    use inspect_core::{Aabb, Configuration, TriangleMesh, Vec3};

    /// A 6x4x2 m room split at `x = 3` by a wall with two gaps, centred at
    /// `y = 1` and `y = 3`, with landmarks lining only the `y = 1` side.
    pub struct TwoCorridors {
        pub world: TriangleMesh,
        pub map: OccupancyMap,
        pub landmarks: Vec<Landmark>,
        pub from: Configuration,
        pub to: Configuration,
        pub sensor: SensorModel,
        pub search: SearchParams,
        pub branches: usize,
    }

    impl TwoCorridors {
        pub fn build() -> Self {
            let world = room(Vec3::zero(), Vec3::new(6.0, 4.0, 2.0))
                .merged(&box_mesh(Vec3::new(2.9, 0.0, 0.0), Vec3::new(3.1, 0.4, 2.0)))
                .merged(&box_mesh(Vec3::new(2.9, 1.6, 0.0), Vec3::new(3.1, 2.4, 2.0)))
                .merged(&box_mesh(Vec3::new(2.9, 3.6, 0.0), Vec3::new(3.1, 4.0, 2.0)));
            let mut map = OccupancyMap::new(MapParams::new(0.2, Aabb::new(Vec3::splat(-0.2), Vec3::new(6.2, 4.2, 2.2)))).unwrap();
            let wide = SensorModel {
                hfov: 100f64.to_radians(),
                vfov: 170f64.to_radians(),
                pitch: 0.0,
                d_max: 8.0,
                ..SensorModel::default()
            };
            for x in [0.7, 1.5, 2.3, 3.7, 4.5, 5.3] {
                for y in [0.7, 2.0, 3.3] {
                    for q in 0..4 {
                        let c = Configuration::from_xyz(x, y, 1.0, q as f64 * std::f64::consts::FRAC_PI_2);
                        sense(&mut map, &world, &c, &wide, 64, 64).unwrap();
                    }
                }
            }
            let landmarks = (0..10)
                .map(|i| Landmark {
                    id: i,
                    position: Vec3::new(1.6 + 0.3 * i as f64, 0.1, 1.0),
                    active: true,
                })
                .collect();
            Self {
                world,
                map,
                landmarks,
                from: Configuration::from_xyz(1.0, 2.0, 1.0, 0.0),
                to: Configuration::from_xyz(5.0, 2.0, 1.0, 0.0),
                sensor: SensorModel {
                    pitch: 0.0,
                    ..SensorModel::default()
                },
                search: SearchParams {
                    max_iterations: 1500,
                    goal_bias: 0.1,
                    ..SearchParams::default()
                },
                branches: 8,
            }
        }

        /// Whether a path passes the wall through the landmark-lined gap.
        pub fn through_rich_gap(path: &inspect_core::search::PlannedPath) -> bool {
            path.configurations.iter().any(|c| c.position.x < 3.0 && c.position.y < 2.0)
        }
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2> {
        vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)]
    }

    /// Seven points of interest on the wall `x = 0` around two rectangular
    /// no-contact patches.
    pub fn contact_task() -> SurfaceTask {
        SurfaceTask {
            origin: Vec3::new(0.0, 0.0, 0.5),
            normal: Vec3::unit_x(),
            pois: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.5, 0.2),
                Point2::new(3.0, 0.0),
                Point2::new(0.3, 1.8),
                Point2::new(1.6, 2.0),
                Point2::new(3.1, 1.7),
                Point2::new(1.55, 1.0),
            ],
            obstacles: vec![rect(0.6, 0.5, 1.1, 1.5), rect(2.0, 0.5, 2.5, 1.5)],
            clearance: 0.3,
            contact_speed: 0.1,
            flight_speed: 0.08,
        }
    }

    /// The sealed exploration room with its map bounds and interior.
    pub fn sealed_room() -> (TriangleMesh, MapParams, Aabb, Configuration) {
        let world = room(Vec3::zero(), Vec3::new(4.0, 4.0, 2.0));
        let params = MapParams::new(0.2, Aabb::new(Vec3::splat(-0.2), Vec3::new(4.2, 4.2, 2.2)));
        (world, params, Aabb::new(Vec3::zero(), Vec3::new(4.0, 4.0, 2.0)), Configuration::from_xyz(2.1, 2.1, 1.1, 0.0))
    }
}
