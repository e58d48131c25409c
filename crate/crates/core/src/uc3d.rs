//! Uniform-coverage inspection: every face is viewed from a similar distance
//! and angle, on a subsampled version of the structure.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::IndexedMesh;
use crate::inspection::{Connections, InspectionPath};
use crate::search::{FreeSpace, MeshSpace};
use crate::sensor::SensorModel;
use crate::sip::{sample_cone, structure_coverage, yaw_towards};
use crate::tour::{nearest_neighbor_tour, solve_tour};
use crate::vehicle::VehicleModel;
use crate::{Configuration, TriangleMesh, Vec3};

/// Viewpoint sampling attempts per face before giving up.
pub const MAX_SAMPLE_TRIES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Uc3dError {
    #[error("target face count {0} is below the minimum of 4")]
    TargetTooSmall(usize),
    #[error("target face count {target} exceeds the mesh's {faces} faces")]
    TargetTooLarge { target: usize, faces: usize },
    #[error("no grid size yields a face count near {0}")]
    NoGridSize(usize),
    #[error("invalid uniformity parameters: {0}")]
    InvalidParams(String),
    #[error("no unoccluded viewpoint found for face {0}")]
    NoUnoccludedSample(usize),
    #[error("no feasible tour after {restarts} restarts; blocking faces {faces:?}, blocking legs {legs:?}")]
    NoFeasibleSolution {
        restarts: usize,
        faces: Vec<usize>,
        legs: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityParams {
    /// Target viewing distance, m.
    pub distance: f64,
    /// Allowed deviation from `distance`, m.
    pub distance_band: f64,
    /// Largest angle between the viewing ray and the face anti-normal, rad.
    pub max_angle: f64,
    pub target_faces: Option<usize>,
}

impl UniformityParams {
    pub fn for_sensor(sensor: &SensorModel) -> Self {
        Self {
            distance: sensor.d_min + 0.15,
            distance_band: 0.1,
            max_angle: 20f64.to_radians(),
            target_faces: None,
        }
    }

    pub fn validate(&self, sensor: &SensorModel) -> Result<(), Uc3dError> {
        let err = |m: &str| Err(Uc3dError::InvalidParams(m.to_string()));
        if !(self.distance >= sensor.d_min) {
            return err("target distance below the sensor's minimum range");
        }
        if !(self.distance_band > 0.0) {
            return err("distance band must be positive");
        }
        if !(self.max_angle > 0.0 && self.max_angle < std::f64::consts::FRAC_PI_2) {
            return err("angle bound must lie in (0, pi/2)");
        }
        Ok(())
    }
}

fn cluster(mesh: &IndexedMesh<f64>, origin: Vec3, cell: f64) -> IndexedMesh<f64> {
    let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
    let mut sums: Vec<(Vec3, usize)> = Vec::new();
    let map: Vec<usize> = mesh
        .vertices
        .iter()
        .map(|v| {
            let k = ((*v - origin) / cell).map(|c| c.floor() as i64);
            let id = *ids.entry([k.x, k.y, k.z]).or_insert_with(|| {
                sums.push((Vec3::splat(0.0), 0));
                sums.len() - 1
            });
            sums[id].0 += *v;
            sums[id].1 += 1;
            id
        })
        .collect();
    let vertices = sums.iter().map(|(s, n)| *s / *n as f64).collect();
    let mut seen: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    let mut faces = Vec::new();
    for f in &mesh.faces {
        let g = f.map(|i| map[i]);
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            continue;
        }
        let mut key = g;
        key.sort_unstable();
        *seen.entry(key).or_insert(0) += 1;
        faces.push(g);
    }
    // a collapsed pair of opposite faces leaves a zero-volume fin
    faces.retain(|g| {
        let mut key = *g;
        key.sort_unstable();
        seen[&key] == 1
    });
    IndexedMesh { vertices, faces }
}

/// Vertex-clustering decimation to roughly `target` faces (within ±20%).
///
/// The grid cell size is found by bisection for several grid offsets; a
/// closed manifold result is preferred.
pub fn subsample_mesh(mesh: &TriangleMesh, target: usize) -> Result<TriangleMesh, Uc3dError> {
    let faces = mesh.len();
    if target < 4 {
        return Err(Uc3dError::TargetTooSmall(target));
    }
    if target > faces {
        return Err(Uc3dError::TargetTooLarge { target, faces });
    }
    if target == faces {
        return Ok(mesh.clone());
    }
    let diag = mesh.bounds().extent().norm();
    let welded = IndexedMesh::weld(mesh, diag * 1e-9);
    let (lo_band, hi_band) = (0.8 * target as f64, 1.2 * target as f64);
    let mut fallback: Option<IndexedMesh<f64>> = None;
    for k in 0..8 {
        let shift = Vec3::new(k as f64 * 0.37, k as f64 * 0.61, k as f64 * 0.13).map(|c| c.fract());
        let (mut lo, mut hi) = (diag * 1e-6, diag);
        for _ in 0..60 {
            let cell = 0.5 * (lo + hi);
            let origin = mesh.bounds().min - shift * cell - Vec3::splat(cell * 0.5);
            let out = cluster(&welded, origin, cell);
            let n = out.faces.len() as f64;
            if n >= lo_band && n <= hi_band {
                if out.is_closed_manifold() || !welded.is_closed_manifold() {
                    return to_mesh(&out, target);
                }
                fallback.get_or_insert(out);
                break;
            }
            if n > hi_band {
                lo = cell;
            } else {
                hi = cell;
            }
        }
    }
    match fallback {
        Some(out) => to_mesh(&out, target),
        None => Err(Uc3dError::NoGridSize(target)),
    }
}

fn to_mesh(m: &IndexedMesh<f64>, target: usize) -> Result<TriangleMesh, Uc3dError> {
    m.to_mesh().map(|(mesh, _)| mesh).map_err(|_| Uc3dError::NoGridSize(target))
}

/// Distance to the face centroid and angle from the face anti-normal.
pub fn viewing_geometry(mesh: &TriangleMesh, face: usize, at: Vec3) -> (f64, f64) {
    let t = mesh.face(face);
    (at.distance(t.centroid), SensorModel::incidence_angle(at, t.centroid, t.normal))
}

/// Samples a viewpoint above the face centroid with its distance uniform in
/// `distance ± band` and its direction uniform over the cone of half-angle
/// `max_angle` about the face normal, heading towards the centroid. Samples the
/// sensor cannot use (occluded, outside the frustum, or in collision) are
/// redrawn.
pub fn sample_uniform_viewpoint<R: Rng>(
    world: &TriangleMesh,
    face: usize,
    params: &UniformityParams,
    sensor: &SensorModel,
    clearance: f64,
    rng: &mut R,
) -> Result<Configuration, Uc3dError> {
    let tri = world.face(face);
    let space = MeshSpace::new(world, clearance);
    let (lo, hi) = (params.distance - params.distance_band, params.distance + params.distance_band);
    for _ in 0..MAX_SAMPLE_TRIES {
        let dir = sample_cone(rng, tri.normal, params.max_angle);
        let r = rng.gen_range(lo..=hi);
        let p = tri.centroid + dir * r;
        let c = Configuration::new(p, yaw_towards(p, tri.centroid));
        if sensor.face_visible(&c, world, face) && space.point_free(p) {
            return Ok(c);
        }
    }
    Err(Uc3dError::NoUnoccludedSample(face))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceAudit {
    pub face: usize,
    pub distance: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uc3dResult {
    /// The (possibly subsampled) structure that was inspected.
    pub mesh: TriangleMesh,
    pub path: InspectionPath,
    /// Restarts used before a feasible tour was found (1-based).
    pub restarts: usize,
    /// Viewing geometry per inspected face, ascending by face.
    pub audit: Vec<FaceAudit>,
}

/// Samples one uniform viewpoint per face and retries until every tour leg
/// is a collision-free direct connection.
#[allow(clippy::too_many_arguments)]
pub fn plan_uniform_inspection(
    mesh: &TriangleMesh,
    params: &UniformityParams,
    sensor: &SensorModel,
    vehicle: &VehicleModel,
    obstacles: Option<&TriangleMesh>,
    max_restarts: usize,
    tour_restarts: usize,
    seed: u64,
) -> Result<Uc3dResult, Uc3dError> {
    params.validate(sensor)?;
    let structure = match params.target_faces {
        Some(t) if t < mesh.len() => subsample_mesh(mesh, t)?,
        _ => mesh.clone(),
    };
    let world = match obstacles {
        Some(o) => structure.merged(o),
        None => structure.clone(),
    };
    let space = MeshSpace::new(&world, vehicle.clearance);
    let faces = structure.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocking_faces = BTreeSet::new();
    let mut blocking_legs = BTreeSet::new();
    for restart in 0..max_restarts {
        let mut sub = ChaCha8Rng::seed_from_u64(rng.gen());
        let mut nodes = Vec::with_capacity(faces);
        let mut failed = false;
        blocking_faces.clear();
        blocking_legs.clear();
        for f in 0..faces {
            match sample_uniform_viewpoint(&world, f, params, sensor, vehicle.clearance, &mut sub) {
                Ok(c) => nodes.push(c),
                Err(_) => {
                    blocking_faces.insert(f);
                    failed = true;
                }
            }
        }
        if failed {
            continue;
        }
        let conn = Connections::direct(vehicle, &space, &nodes);
        let m = conn.matrix();
        // an infeasible instance still yields a tour whose blocked legs are reported
        let order = match solve_tour(&m, true, tour_restarts, sub.gen()) {
            Ok(t) => t.order,
            Err(_) => nearest_neighbor_tour(&m, true).order,
        };
        let n = order.len();
        let legs: Vec<(usize, usize)> = if n > 1 {
            (0..n).map(|k| (order[k], order[(k + 1) % n])).collect()
        } else {
            Vec::new()
        };
        let bad: Vec<(usize, usize)> = legs.iter().copied().filter(|&(a, b)| !conn.cost(a, b).is_finite()).collect();
        if !bad.is_empty() {
            blocking_legs.extend(bad);
            continue;
        }
        let paths = legs
            .iter()
            .map(|&(a, b)| conn.path(vehicle, a, b).expect("finite legs"))
            .collect::<Vec<_>>();
        let viewpoints: Vec<Configuration> = order.iter().map(|&i| nodes[i]).collect();
        let audit = (0..faces)
            .map(|f| {
                let (distance, angle) = viewing_geometry(&structure, f, nodes[f].position);
                FaceAudit { face: f, distance, angle }
            })
            .collect();
        let covered = structure_coverage(sensor, &world, faces, &viewpoints);
        let cost = paths.iter().map(|p| p.cost).sum();
        return Ok(Uc3dResult {
            mesh: structure,
            path: InspectionPath {
                viewpoints,
                legs: paths,
                cost,
                covered,
            },
            restarts: restart + 1,
            audit,
        });
    }
    Err(Uc3dError::NoFeasibleSolution {
        restarts: max_restarts,
        faces: blocking_faces.into_iter().collect(),
        legs: blocking_legs.into_iter().collect(),
    })
}
