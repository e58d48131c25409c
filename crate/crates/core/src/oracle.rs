//! Slow reference implementations used to cross-check the fast paths.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3};

use crate::belief::NoiseParams;
use crate::contact::{Point2, SurfaceTask};
use crate::geometry::intersect_face;
use crate::geometry::primitives::closest_point_on_triangle;
use crate::graph::dijkstra;
use crate::occupancy::{OccupancyMap, VoxelKey, VoxelState};
use crate::sensor::SensorModel;
use crate::{Aabb, Configuration, Hit, Ray, TriangleMesh, Vec3};

/// Nearest hit by testing every face (lowest index on equal `t`).
pub fn ray_cast_exhaustive(mesh: &TriangleMesh, ray: &Ray) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for (i, tri) in mesh.triangles().iter().enumerate() {
        if let Some(t) = intersect_face(ray, tri) {
            if best.is_none_or(|b| t < b.t) {
                best = Some(Hit {
                    t,
                    face: i,
                    point: ray.at(t),
                });
            }
        }
    }
    best
}

/// Point in camera coordinates `(forward, left, up)` through an explicit
/// yaw-then-pitch rotation.
fn camera_coords(sensor: &SensorModel, config: &Configuration, p: Vec3) -> Vector3<f64> {
    let r = Rotation3::from_axis_angle(&Vector3::z_axis(), config.yaw()) * Rotation3::from_axis_angle(&Vector3::y_axis(), -sensor.pitch);
    let d = p - config.position;
    r.inverse() * Vector3::new(d.x, d.y, d.z)
}

fn in_view(sensor: &SensorModel, config: &Configuration, p: Vec3) -> bool {
    let c = camera_coords(sensor, config, p);
    let dist = c.norm();
    c.x > 0.0
        && c.y.abs().atan2(c.x) <= sensor.hfov * 0.5
        && c.z.abs().atan2(c.x) <= sensor.vfov * 0.5
        && dist >= sensor.d_min
        && dist <= sensor.d_max
}

/// Four-condition visibility evaluated face by face without the hierarchy.
pub fn face_visible_exhaustive(sensor: &SensorModel, config: &Configuration, mesh: &TriangleMesh, face: usize) -> bool {
    let tri = mesh.face(face);
    if !in_view(sensor, config, tri.centroid) {
        return false;
    }
    let to = tri.centroid - config.position;
    let dist = to.norm();
    let cos_inc = -(to / dist).dot(tri.normal);
    if cos_inc.clamp(-1.0, 1.0).acos() > sensor.max_incidence {
        return false;
    }
    let reach = dist - crate::geometry::RAY_EPSILON;
    if reach <= crate::geometry::RAY_EPSILON {
        return true;
    }
    let Some(ray) = Ray::towards(config.position, tri.centroid, Some(reach)) else {
        return true;
    };
    mesh.triangles().iter().all(|t| intersect_face(&ray, t).is_none())
}

pub fn visible_set_exhaustive(sensor: &SensorModel, config: &Configuration, mesh: &TriangleMesh) -> Vec<usize> {
    (0..mesh.len())
        .filter(|&f| face_visible_exhaustive(sensor, config, mesh, f))
        .collect()
}

/// Segment-to-triangle distance by ternary search along the segment (the
/// distance to a convex set is convex along a line).
pub fn segment_triangle_distance_search(a: Vec3, b: Vec3, v: &[Vec3; 3]) -> f64 {
    let f = |t: f64| {
        let p = a.lerp(b, t);
        p.distance(closest_point_on_triangle(p, v))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

pub fn segment_mesh_distance(mesh: &TriangleMesh, a: Vec3, b: Vec3) -> f64 {
    mesh.triangles()
        .iter()
        .map(|t| segment_triangle_distance_search(a, b, &t.vertices))
        .fold(f64::INFINITY, f64::min)
}

/// Segment-box overlap by the slab method.
fn segment_hits_box(a: Vec3, b: Vec3, lo: Vec3, hi: Vec3) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..3 {
        let (o, dd, l, h) = (a.get(axis), d.get(axis), lo.get(axis), hi.get(axis));
        if dd.abs() < 1e-15 {
            if o < l || o > h {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((l - o) / dd, (h - o) / dd);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Line of sight by testing every voxel box against the segment.
pub fn line_of_sight_exhaustive(map: &OccupancyMap, from: Vec3, target: VoxelKey) -> bool {
    let to = map.center_of(target);
    let r = map.resolution();
    let [nx, ny, nz] = map.dims();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let k = [x, y, z];
                if k == target || map.state(k) != VoxelState::Occupied {
                    continue;
                }
                let c = map.center_of(k);
                let h = Vec3::splat(r * 0.5);
                if segment_hits_box(from, to, c - h, c + h) {
                    return false;
                }
            }
        }
    }
    true
}

/// Unknown voxels in view with an unobstructed line of sight, by visiting
/// every voxel of the grid.
pub fn count_unknown_visible_exhaustive(map: &OccupancyMap, config: &Configuration, sensor: &SensorModel) -> usize {
    let [nx, ny, nz] = map.dims();
    let mut n = 0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let k = [x, y, z];
                if map.state(k) == VoxelState::Unknown
                    && in_view(sensor, config, map.center_of(k))
                    && line_of_sight_exhaustive(map, config.position, k)
                {
                    n += 1;
                }
            }
        }
    }
    n
}

/// One prediction from `from` to `to` and a bearing update for each listed
/// landmark, with full dense Jacobians.
pub fn dense_ekf_step(
    cov: &DMatrix<f64>,
    from: &Configuration,
    to: &Configuration,
    landmarks: &[(usize, Vec3)],
    noise: &NoiseParams,
) -> DMatrix<f64> {
    let n = cov.nrows();
    let d = to.position - from.position;
    let mut f = DMatrix::<f64>::identity(n, n);
    f[(0, 3)] = -d.y;
    f[(1, 3)] = d.x;
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..4 {
        q[(i, i)] = noise.odometry[i] * d.norm();
    }
    let mut p = &f * cov * f.transpose() + q;
    p = (&p + p.transpose()) * 0.5;
    let psi = to.yaw();
    let rot_t = *Rotation3::from_axis_angle(&Vector3::z_axis(), psi).inverse().matrix();
    let skew_z = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let var = noise.bearing_sigma.max(crate::belief::MIN_BEARING_SIGMA).powi(2);
    for &(k, l) in landmarks {
        let diff = Vector3::new(l.x - to.position.x, l.y - to.position.y, l.z - to.position.z);
        let r = diff.norm();
        let u = diff / r;
        let du = (Matrix3::identity() - u * u.transpose()) / r;
        let mut h = DMatrix::<f64>::zeros(3, n);
        let h_l = rot_t * du;
        let h_psi = -(rot_t * skew_z * u);
        for i in 0..3 {
            for j in 0..3 {
                h[(i, j)] = -h_l[(i, j)];
                h[(i, 4 + 3 * k + j)] = h_l[(i, j)];
            }
            h[(i, 3)] = h_psi[i];
        }
        let s = &h * &p * h.transpose() + DMatrix::<f64>::identity(3, 3) * var;
        let gain = &p * h.transpose() * s.try_inverse().expect("innovation covariance is invertible");
        p = (DMatrix::<f64>::identity(n, n) - gain * &h) * p;
        p = (&p + p.transpose()) * 0.5;
    }
    p
}

/// Shortest obstacle-avoiding surface path length on a square lattice of
/// the given spacing with a 9x9-offset neighborhood (worst-case metric
/// error under 1%). The endpoints are joined to every lattice node within
/// two spacings.
pub fn grid_shortest_path(task: &SurfaceTask, a: Point2, b: Point2, spacing: f64) -> f64 {
    let mut lo = a.inf(&b);
    let mut hi = a.sup(&b);
    for p in task.obstacles.iter().flatten() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let margin = Point2::new(4.0 * spacing, 4.0 * spacing);
    lo -= margin;
    hi += margin;
    let nx = ((hi.x - lo.x) / spacing).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / spacing).ceil() as usize + 1;
    let node = |i: usize, j: usize| Point2::new(lo.x + i as f64 * spacing, lo.y + j as f64 * spacing);
    let count = nx * ny;
    let mut pts: Vec<Point2> = (0..count).map(|k| node(k % nx, k / nx)).collect();
    pts.push(a);
    pts.push(b);
    let (ia, ib) = (count, count + 1);
    let mut adj = vec![Vec::new(); count + 2];
    let offsets: Vec<(i64, i64)> = (-4i64..=4)
        .flat_map(|dx| (-4i64..=4).map(move |dy| (dx, dy)))
        .filter(|&(dx, dy)| (dx, dy) != (0, 0) && gcd(dx.unsigned_abs(), dy.unsigned_abs()) == 1)
        .collect();
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if task.in_obstacle(pts[k]) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (ii, jj) = (i as i64 + dx, j as i64 + dy);
                if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                    continue;
                }
                let m = jj as usize * nx + ii as usize;
                if task.segment_clear(pts[k], pts[m]) {
                    adj[k].push((m, (pts[m] - pts[k]).norm()));
                }
            }
        }
    }
    for (e, p) in [(ia, a), (ib, b)] {
        for k in 0..count {
            if (pts[k] - p).norm() <= 2.0 * spacing && task.segment_clear(p, pts[k]) {
                let d = (pts[k] - p).norm();
                adj[e].push((k, d));
                adj[k].push((e, d));
            }
        }
    }
    dijkstra(&adj, ia).0[ib]
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Shortest turn-straight-turn path length found by scanning the first arc
/// angle and solving for the straight segment numerically. Exact for the
/// Dubins problem whenever the endpoints are more than four radii apart.
pub fn dubins_csc_numeric(start: (f64, f64, f64), goal: (f64, f64, f64), radius: f64) -> f64 {
    let arc = |(x, y, h): (f64, f64, f64), turn: f64, t: f64| {
        // turn = +1 for left, -1 for right; t is the swept angle
        let (cx, cy) = (x - turn * radius * h.sin(), y + turn * radius * h.cos());
        let nh = h + turn * t;
        (cx + turn * radius * nh.sin(), cy - turn * radius * nh.cos(), nh)
    };
    let mut best = f64::INFINITY;
    for s1 in [1.0, -1.0] {
        for s3 in [1.0, -1.0] {
            let residual = |t1: f64| {
                let p = arc(start, s1, t1);
                let t3 = (s3 * (goal.2 - p.2)).rem_euclid(TAU);
                // walk the last arc backwards from the goal
                let q = arc((goal.0, goal.1, goal.2 + std::f64::consts::PI), -s3, t3);
                let (dx, dy) = (q.0 - p.0, q.1 - p.1);
                let (hx, hy) = (p.2.cos(), p.2.sin());
                (hx * dy - hy * dx, hx * dx + hy * dy, t3)
            };
            let steps = 20_000;
            let mut prev = residual(0.0);
            for i in 1..=steps {
                let t = TAU * i as f64 / steps as f64;
                let cur = residual(t);
                if prev.0.signum() != cur.0.signum() || cur.0 == 0.0 {
                    let (mut lo, mut hi) = (TAU * (i - 1) as f64 / steps as f64, t);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if residual(lo).0.signum() == residual(mid).0.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let t1 = 0.5 * (lo + hi);
                    let (perp, along, t3) = residual(t1);
                    if perp.abs() < 1e-6 && along >= -1e-9 {
                        best = best.min(radius * (t1 + t3) + along.max(0.0));
                    }
                }
                prev = cur;
            }
        }
    }
    best
}

/// Voxel keys whose centers lie in `region`.
pub fn voxels_in(map: &OccupancyMap, region: &Aabb) -> Vec<VoxelKey> {
    let mut out = Vec::new();
    map.for_each_voxel_in(region, |k| out.push(k));
    out
}
