//! Structural inspection planning by alternating viewpoint resampling and
//! tour optimization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::inspection::{Connections, InspectionPath};
use crate::search::{FreeSpace, MeshSpace, SearchParams};
use crate::sensor::SensorModel;
use crate::tour::{nearest_neighbor_tour, solve_tour, CostMatrix};
use crate::vehicle::VehicleModel;
use crate::{Configuration, TriangleMesh, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SipError {
    #[error("face {0} cannot be seen from any admissible configuration")]
    FaceInfeasible(usize),
    #[error("no face of the structure can be inspected")]
    NothingFeasible,
    #[error("no path found between viewpoints of faces {from} and {to}")]
    NoPathWithinBudget { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SipParams {
    pub iterations: usize,
    /// Feasible candidates drawn per face.
    pub candidates: usize,
    /// Upper end of the sampled viewing distance (clipped to the sensor range), m.
    pub max_view_distance: f64,
    pub tour_restarts: usize,
    pub search: SearchParams,
}

impl Default for SipParams {
    fn default() -> Self {
        Self {
            iterations: 10,
            candidates: 60,
            max_view_distance: 2.0,
            tour_restarts: 5,
            search: SearchParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SipResult {
    pub path: InspectionPath,
    /// Faces no admissible configuration can see.
    pub excluded: Vec<usize>,
    /// Best cost after each iteration.
    pub cost_history: Vec<f64>,
    /// Face inspected from each viewpoint of `path`.
    pub viewpoint_faces: Vec<usize>,
}

/// Everything a viewpoint sampler needs to know about the scene.
#[derive(Debug, Clone, Copy)]
pub struct ViewContext<'a> {
    pub sensor: &'a SensorModel,
    pub vehicle: &'a VehicleModel,
    /// Structure faces first, followed by any obstacle faces.
    pub world: &'a TriangleMesh,
    pub max_view_distance: f64,
}

impl ViewContext<'_> {
    fn space(&self) -> MeshSpace<'_> {
        MeshSpace::new(self.world, self.vehicle.clearance)
    }
}

/// Uniform direction within `half_angle` of the unit vector `axis`.
pub fn sample_cone<R: Rng>(rng: &mut R, axis: Vec3, half_angle: f64) -> Vec3 {
    let cos_t = 1.0 - rng.gen::<f64>() * (1.0 - half_angle.cos());
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let helper = if axis.x.abs() < 0.9 { Vec3::unit_x() } else { Vec3::unit_y() };
    let u = axis.cross(helper).normalize();
    let v = axis.cross(u);
    axis * cos_t + u * (sin_t * phi.cos()) + v * (sin_t * phi.sin())
}

/// Heading that points the optical axis horizontally at `target`.
pub fn yaw_towards(from: Vec3, target: Vec3) -> f64 {
    let d = target - from;
    if d.x.hypot(d.y) < 1e-12 {
        0.0
    } else {
        d.y.atan2(d.x)
    }
}

fn neighbor_cost(vehicle: &VehicleModel, c: &Configuration, neighbors: &[Configuration]) -> f64 {
    neighbors
        .iter()
        .map(|n| vehicle.connect_cost(n, c).unwrap_or(f64::INFINITY) + vehicle.connect_cost(c, n).unwrap_or(f64::INFINITY))
        .sum::<f64>()
        * 0.5
}

/// Feasible candidate viewpoints for `face`, at most `count` of them, drawn
/// from at most `10 * count` samples.
pub fn candidate_viewpoints<R: Rng>(ctx: &ViewContext, face: usize, count: usize, rng: &mut R) -> Vec<Configuration> {
    let tri = ctx.world.face(face);
    let sensor = ctx.sensor;
    let far = ctx.max_view_distance.min(sensor.d_max);
    let near = sensor.d_min;
    let space = ctx.space();
    let mut out = Vec::new();
    if far < near {
        return out;
    }
    for _ in 0..10 * count {
        let dir = sample_cone(rng, tri.normal, sensor.max_incidence);
        let r = rng.gen_range(near..=far);
        let p = tri.centroid + dir * r;
        let offset = rng.gen_range(-0.25..=0.25) * sensor.hfov;
        let c = Configuration::new(p, yaw_towards(p, tri.centroid) + offset);
        if sensor.face_visible(&c, ctx.world, face) && space.point_free(p) {
            out.push(c);
            if out.len() == count {
                break;
            }
        }
    }
    out
}

/// Samples a viewpoint that sees `face`, choosing among `count` feasible
/// candidates the one cheapest to connect to `neighbors` (or, without
/// neighbors, to `previous`).
pub fn sample_viewpoint_for_face<R: Rng>(
    ctx: &ViewContext,
    face: usize,
    previous: Option<&Configuration>,
    neighbors: &[Configuration],
    count: usize,
    rng: &mut R,
) -> Result<Configuration, SipError> {
    let cands = candidate_viewpoints(ctx, face, count, rng);
    let anchors: Vec<Configuration> = if neighbors.is_empty() {
        previous.into_iter().copied().collect()
    } else {
        neighbors.to_vec()
    };
    let mut best: Option<(f64, Configuration)> = None;
    for c in cands {
        let cost = neighbor_cost(ctx.vehicle, &c, &anchors);
        if best.is_none_or(|b| cost < b.0) {
            best = Some((cost, c));
        }
    }
    best.map(|b| b.1).ok_or(SipError::FaceInfeasible(face))
}

/// Iterative viewpoint resampling and tour optimization.
///
/// `obstacles` are part of the world for collision and occlusion but are
/// not inspected.
pub fn plan_inspection(
    mesh: &TriangleMesh,
    sensor: &SensorModel,
    vehicle: &VehicleModel,
    obstacles: Option<&TriangleMesh>,
    params: &SipParams,
    seed: u64,
) -> Result<SipResult, SipError> {
    let world = match obstacles {
        Some(o) => mesh.merged(o),
        None => mesh.clone(),
    };
    let ctx = ViewContext {
        sensor,
        vehicle,
        world: &world,
        max_view_distance: params.max_view_distance,
    };
    let space = ctx.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let faces = mesh.len();

    let centroids: Vec<Vec3> = mesh.triangles().iter().map(|t| t.centroid).collect();
    let dist = CostMatrix::from_fn(faces, |i, j| centroids[i].distance(centroids[j])).expect("finite distances");
    let mut order: Vec<usize> = nearest_neighbor_tour(&dist, true).order;

    let mut views: Vec<Option<Configuration>> = vec![None; faces];
    let mut excluded = Vec::new();
    let mut previous: Option<Configuration> = None;
    for &f in &order {
        match sample_viewpoint_for_face(&ctx, f, previous.as_ref(), &[], params.candidates, &mut rng) {
            Ok(c) => {
                views[f] = Some(c);
                previous = Some(c);
            }
            Err(_) => excluded.push(f),
        }
    }
    excluded.sort_unstable();
    order.retain(|f| views[*f].is_some());
    if order.is_empty() {
        return Err(SipError::NothingFeasible);
    }

    let mut best: Option<SipResult> = None;
    let mut history = Vec::with_capacity(params.iterations.max(1));
    for it in 0..params.iterations.max(1) {
        if it > 0 {
            let n = order.len();
            for k in 0..n {
                let f = order[k];
                let neighbors: Vec<Configuration> = if n == 1 {
                    Vec::new()
                } else {
                    let prev = views[order[(k + n - 1) % n]].expect("feasible");
                    let next = views[order[(k + 1) % n]].expect("feasible");
                    vec![prev, next]
                };
                if let Ok(c) = sample_viewpoint_for_face(&ctx, f, views[f].as_ref(), &neighbors, params.candidates, &mut rng) {
                    views[f] = Some(c);
                }
            }
        }
        let faces_in_order = order.clone();
        let nodes: Vec<Configuration> = faces_in_order.iter().map(|&f| views[f].expect("feasible")).collect();
        let conn = Connections::relayed(vehicle, &space, &nodes, &params.search, rng.gen())
            .map_err(|(i, j)| SipError::NoPathWithinBudget {
                from: faces_in_order[i],
                to: faces_in_order[j],
            })?;
        let tour = solve_tour(&conn.matrix(), true, params.tour_restarts, rng.gen()).map_err(|_| {
            SipError::NoPathWithinBudget {
                from: faces_in_order[0],
                to: faces_in_order[faces_in_order.len() - 1],
            }
        })?;
        order = tour.order.iter().map(|&i| faces_in_order[i]).collect();
        if best.as_ref().is_none_or(|b| tour.cost < b.path.cost) {
            best = Some(assemble(mesh, sensor, vehicle, &world, &conn, &tour.order, &nodes, &faces_in_order, &excluded));
        }
        history.push(best.as_ref().expect("set above").path.cost);
    }
    let mut result = best.expect("at least one iteration");
    result.cost_history = history;
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    mesh: &TriangleMesh,
    sensor: &SensorModel,
    vehicle: &VehicleModel,
    world: &TriangleMesh,
    conn: &Connections,
    tour: &[usize],
    nodes: &[Configuration],
    faces: &[usize],
    excluded: &[usize],
) -> SipResult {
    let viewpoints: Vec<Configuration> = tour.iter().map(|&i| nodes[i]).collect();
    let mut legs = Vec::new();
    if tour.len() > 1 {
        for k in 0..tour.len() {
            let (a, b) = (tour[k], tour[(k + 1) % tour.len()]);
            legs.push(conn.path(vehicle, a, b).expect("finite tour legs have paths"));
        }
    }
    let cost = legs.iter().map(|l| l.cost).sum();
    let covered = structure_coverage(sensor, world, mesh.len(), &viewpoints);
    SipResult {
        path: InspectionPath {
            viewpoints,
            legs,
            cost,
            covered,
        },
        excluded: excluded.to_vec(),
        cost_history: Vec::new(),
        viewpoint_faces: tour.iter().map(|&i| faces[i]).collect(),
    }
}

/// Coverage of the first `structure_faces` faces of `world`.
pub fn structure_coverage(sensor: &SensorModel, world: &TriangleMesh, structure_faces: usize, viewpoints: &[Configuration]) -> Vec<usize> {
    let mut all = crate::inspection::coverage(sensor, world, viewpoints);
    all.retain(|&f| f < structure_faces);
    all
}
