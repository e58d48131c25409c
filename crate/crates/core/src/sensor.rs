//! Camera frustum model with range and incidence limits.

use thiserror::Error;

use crate::geometry::Ray;
use crate::{Configuration, TriangleMesh, Vec3};

/// Pinhole-style camera mounted on the robot body.
///
/// Angles are radians; `pitch` is the body-frame mounting pitch (negative
/// looks down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    pub hfov: f64,
    pub vfov: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Largest allowed angle between the viewing direction and the reversed face normal.
    pub max_incidence: f64,
    pub pitch: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("field of view must be in (0, pi): hfov={hfov}, vfov={vfov}")]
    FieldOfView { hfov: f64, vfov: f64 },
    #[error("range must satisfy 0 <= d_min < d_max: d_min={d_min}, d_max={d_max}")]
    Range { d_min: f64, d_max: f64 },
    #[error("incidence limit must be in (0, pi/2]: {0}")]
    Incidence(f64),
    #[error("mounting pitch must be finite")]
    Pitch,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            hfov: 90f64.to_radians(),
            vfov: 60f64.to_radians(),
            d_min: 0.35,
            d_max: 5.0,
            max_incidence: 72f64.to_radians(),
            pitch: (-15f64).to_radians(),
        }
    }
}

/// Orthonormal camera axes in the world frame.
#[derive(Debug, Clone, Copy)]
pub struct CameraFrame {
    pub origin: Vec3,
    pub forward: Vec3,
    pub left: Vec3,
    pub up: Vec3,
}

impl CameraFrame {
    /// World direction for camera-frame components `(forward, left, up)`.
    #[inline]
    pub fn to_world(&self, f: f64, l: f64, u: f64) -> Vec3 {
        self.forward * f + self.left * l + self.up * u
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        let pi = std::f64::consts::PI;
        let fov_ok = |a: f64| a > 0.0 && a < pi;
        if !(fov_ok(self.hfov) && fov_ok(self.vfov)) {
            return Err(SensorError::FieldOfView {
                hfov: self.hfov,
                vfov: self.vfov,
            });
        }
        if !(self.d_min >= 0.0 && self.d_min < self.d_max && self.d_max.is_finite()) {
            return Err(SensorError::Range {
                d_min: self.d_min,
                d_max: self.d_max,
            });
        }
        if !(self.max_incidence > 0.0 && self.max_incidence <= pi / 2.0) {
            return Err(SensorError::Incidence(self.max_incidence));
        }
        if !self.pitch.is_finite() {
            return Err(SensorError::Pitch);
        }
        Ok(())
    }

    pub fn frame(&self, config: &Configuration) -> CameraFrame {
        let (sy, cy) = config.yaw().sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        CameraFrame {
            origin: config.position,
            forward: Vec3::new(cp * cy, cp * sy, sp),
            left: Vec3::new(-sy, cy, 0.0),
            up: Vec3::new(-sp * cy, -sp * sy, cp),
        }
    }

    /// Angular frustum test only (no range limits).
    #[inline]
    pub fn in_frustum(&self, frame: &CameraFrame, p: Vec3) -> bool {
        let v = p - frame.origin;
        let a = v.dot(frame.forward);
        if a <= 0.0 {
            return false;
        }
        let b = v.dot(frame.left);
        let c = v.dot(frame.up);
        b.abs() <= a * (self.hfov * 0.5).tan() && c.abs() <= a * (self.vfov * 0.5).tan()
    }

    #[inline]
    pub fn in_range(&self, dist: f64) -> bool {
        dist >= self.d_min && dist <= self.d_max
    }

    /// Frustum and range test for a point.
    #[inline]
    pub fn contains_point(&self, frame: &CameraFrame, p: Vec3) -> bool {
        self.in_range(p.distance(frame.origin)) && self.in_frustum(frame, p)
    }

    /// Angle between the viewing direction onto `target` and the reversed normal.
    pub fn incidence_angle(origin: Vec3, target: Vec3, normal: Vec3) -> f64 {
        let view = (target - origin).normalize();
        (-view).dot(normal).clamp(-1.0, 1.0).acos()
    }

    /// Centroid-based visibility of one face: frustum, range band, incidence
    /// limit and an unobstructed line of sight.
    pub fn face_visible(&self, config: &Configuration, mesh: &TriangleMesh, face: usize) -> bool {
        let frame = self.frame(config);
        self.face_visible_in(&frame, mesh, face)
    }

    fn face_visible_in(&self, frame: &CameraFrame, mesh: &TriangleMesh, face: usize) -> bool {
        let tri = mesh.face(face);
        let dist = tri.centroid.distance(frame.origin);
        if !self.in_range(dist) || !self.in_frustum(frame, tri.centroid) {
            return false;
        }
        if Self::incidence_angle(frame.origin, tri.centroid, tri.normal) > self.max_incidence {
            return false;
        }
        !self.line_blocked(frame.origin, tri.centroid, dist, mesh)
    }

    /// `true` if some face is hit strictly before `target` (minus the shared-edge tolerance).
    fn line_blocked(&self, origin: Vec3, target: Vec3, dist: f64, mesh: &TriangleMesh) -> bool {
        let reach = dist - crate::geometry::RAY_EPSILON;
        if reach <= crate::geometry::RAY_EPSILON {
            return false;
        }
        match Ray::towards(origin, target, Some(reach)) {
            Some(ray) => mesh.ray_occluded(&ray),
            None => false,
        }
    }

    /// All faces for which [`SensorModel::face_visible`] holds, ascending.
    pub fn visible_set(&self, config: &Configuration, mesh: &TriangleMesh) -> Vec<usize> {
        let frame = self.frame(config);
        (0..mesh.len())
            .filter(|&f| self.face_visible_in(&frame, mesh, f))
            .collect()
    }

    /// Whether a free-standing point (e.g. a landmark) can be observed.
    pub fn point_visible(&self, config: &Configuration, p: Vec3, world: Option<&TriangleMesh>) -> bool {
        let frame = self.frame(config);
        if !self.contains_point(&frame, p) {
            return false;
        }
        match world {
            Some(mesh) => !self.line_blocked(frame.origin, p, p.distance(frame.origin), mesh),
            None => true,
        }
    }

    /// Unit ray directions of a `rays_h x rays_v` scan, row-major in `v`.
    ///
    /// The grid is uniform in the projected azimuth / elevation angles, so
    /// every ray lies inside the frustum.
    pub fn scan_directions(&self, config: &Configuration, rays_h: usize, rays_v: usize) -> Vec<Vec3> {
        assert!(rays_h >= 2 && rays_v >= 2, "scan grid must be at least 2x2");
        let frame = self.frame(config);
        let mut dirs = Vec::with_capacity(rays_h * rays_v);
        for j in 0..rays_v {
            let el = -self.vfov * 0.5 + self.vfov * j as f64 / (rays_v - 1) as f64;
            for i in 0..rays_h {
                let az = -self.hfov * 0.5 + self.hfov * i as f64 / (rays_h - 1) as f64;
                dirs.push(frame.to_world(1.0, az.tan(), el.tan()).normalize());
            }
        }
        dirs
    }

    /// Simulated depth scan: nearest hit within `d_max` per ray.
    pub fn simulate_scan(
        &self,
        config: &Configuration,
        world: Option<&TriangleMesh>,
        rays_h: usize,
        rays_v: usize,
    ) -> Vec<Option<Vec3>> {
        self.scan_directions(config, rays_h, rays_v)
            .into_iter()
            .map(|d| {
                let world = world?;
                let ray = Ray::new(config.position, d, Some(self.d_max))?;
                world.ray_cast(&ray).map(|h| h.point)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn facing_face(dist: f64) -> TriangleMesh {
        // a small triangle in the plane x = dist, normal towards -x
        let (mesh, _) = TriangleMesh::from_vertex_triples([[
            Vec3::new(dist, -0.1, -0.1),
            Vec3::new(dist, -0.1, 0.2),
            Vec3::new(dist, 0.2, -0.1),
        ]])
        .unwrap();
        mesh
    }

    fn level_sensor() -> SensorModel {
        SensorModel {
            pitch: 0.0,
            ..SensorModel::default()
        }
    }

    #[test]
    fn face_ahead_is_visible() {
        let mesh = facing_face(1.0);
        assert!(mesh.face(0).normal.x < -0.99);
        let c = Configuration::from_xyz(0.0, 0.0, 0.0, 0.0);
        assert!(level_sensor().face_visible(&c, &mesh, 0));
    }

    #[test]
    fn minimum_inspection_distance() {
        let mesh = facing_face(0.2);
        let c = Configuration::from_xyz(0.0, 0.0, 0.0, 0.0);
        assert!(!level_sensor().face_visible(&c, &mesh, 0));
    }

    #[test]
    fn behind_structure_sees_nothing() {
        let mesh = facing_face(1.0);
        let c = Configuration::from_xyz(2.0, 0.0, 0.0, 0.0);
        assert!(level_sensor().visible_set(&c, &mesh).is_empty());
        // looking back at the face from behind: backface fails incidence
        let c = Configuration::from_xyz(2.0, 0.0, 0.0, std::f64::consts::PI);
        assert!(level_sensor().visible_set(&c, &mesh).is_empty());
    }

    #[test]
    fn cube_from_positive_x_sees_two_faces() {
        let cube: TriangleMesh = shapes::unit_cube();
        let c = Configuration::from_xyz(3.0, 0.5, 0.5, std::f64::consts::PI);
        let vis = level_sensor().visible_set(&c, &cube);
        assert_eq!(vis.len(), 2);
        for f in vis {
            assert!(cube.face(f).normal.x > 0.99);
        }
    }

    #[test]
    fn yaw_full_turn_keeps_visible_set() {
        let cube: TriangleMesh = shapes::unit_cube();
        let c = Configuration::from_xyz(2.5, -1.0, 1.5, 2.6);
        let d = Configuration::from_xyz(2.5, -1.0, 1.5, 2.6 + 2.0 * std::f64::consts::PI);
        let s = SensorModel::default();
        assert_eq!(s.visible_set(&c, &cube), s.visible_set(&d, &cube));
    }

    #[test]
    fn wall_scan_ranges() {
        let wall: TriangleMesh = shapes::box_mesh(Vec3::new(2.0, -10.0, -10.0), Vec3::new(2.5, 10.0, 10.0));
        let s = level_sensor();
        let c = Configuration::from_xyz(0.0, 0.0, 0.0, 0.0);
        let hits = s.simulate_scan(&c, Some(&wall), 5, 4);
        let dirs = s.scan_directions(&c, 5, 4);
        for (h, d) in hits.iter().zip(dirs) {
            let p = h.expect("wall fills the frustum");
            let cos = d.x;
            assert!((p.norm() - 2.0 / cos).abs() < 1e-9);
        }
        assert!(s.simulate_scan(&c, None, 3, 3).iter().all(Option::is_none));
    }

    #[test]
    fn validation() {
        assert!(SensorModel::default().validate().is_ok());
        let bad = SensorModel {
            d_min: 6.0,
            ..SensorModel::default()
        };
        assert!(matches!(bad.validate(), Err(SensorError::Range { .. })));
        let bad = SensorModel {
            hfov: 4.0,
            ..SensorModel::default()
        };
        assert!(bad.validate().is_err());
    }
}
