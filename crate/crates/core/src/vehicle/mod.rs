//! Holonomic and nonholonomic local paths with time-based cost.

pub mod dubins;

use crate::geometry::{angle_diff, wrap_angle};
use crate::{Configuration, Vec3};
use dubins::DubinsPath;

/// Maximum distance between consecutive waypoints of a [`LocalPath`].
pub const WAYPOINT_SPACING: f64 = 0.05;
/// Maximum heading change between consecutive waypoints, radians.
const YAW_SPACING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VehicleKind {
    Holonomic,
    Nonholonomic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleModel {
    pub kind: VehicleKind,
    /// m/s
    pub v_max: f64,
    /// rad/s
    pub yaw_rate_max: f64,
    /// Collision clearance radius, m.
    pub clearance: f64,
}

impl Default for VehicleModel {
    fn default() -> Self {
        Self {
            kind: VehicleKind::Holonomic,
            v_max: 0.25,
            yaw_rate_max: 0.5,
            clearance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid vehicle model: {0}")]
pub struct VehicleError(pub String);

/// A feasible connection between two configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPath {
    pub start: Configuration,
    pub end: Configuration,
    /// Dense samples, first = `start`, last = `end`.
    pub waypoints: Vec<Configuration>,
    /// Execution time, s.
    pub cost: f64,
    /// Travelled distance, m.
    pub length: f64,
    /// All waypoints lie on the straight segment `start -> end`.
    pub straight: bool,
}

impl VehicleModel {
    pub fn holonomic(v_max: f64, yaw_rate_max: f64) -> Self {
        Self {
            kind: VehicleKind::Holonomic,
            v_max,
            yaw_rate_max,
            ..Self::default()
        }
    }

    pub fn nonholonomic(v_max: f64, yaw_rate_max: f64) -> Self {
        Self {
            kind: VehicleKind::Nonholonomic,
            v_max,
            yaw_rate_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(VehicleError("v_max must be positive".into()));
        }
        if !(self.yaw_rate_max > 0.0 && self.yaw_rate_max.is_finite()) {
            return Err(VehicleError("yaw_rate_max must be positive".into()));
        }
        if !(self.clearance >= 0.0 && self.clearance.is_finite()) {
            return Err(VehicleError("clearance must be non-negative".into()));
        }
        Ok(())
    }

    /// Minimum turn radius of the nonholonomic model.
    pub fn turn_radius(&self) -> f64 {
        self.v_max / self.yaw_rate_max
    }

    /// Time cost of `a -> b` without building waypoints.
    pub fn connect_cost(&self, a: &Configuration, b: &Configuration) -> Option<f64> {
        match self.kind {
            VehicleKind::Holonomic => {
                let dist = a.position.distance(b.position);
                let dyaw = angle_diff(a.yaw(), b.yaw()).abs();
                Some((dist / self.v_max).max(dyaw / self.yaw_rate_max))
            }
            VehicleKind::Nonholonomic => {
                let (d, _) = self.dubins(a, b)?;
                let dz = b.position.z - a.position.z;
                Some(d.length().hypot(dz) / self.v_max)
            }
        }
    }

    fn dubins(&self, a: &Configuration, b: &Configuration) -> Option<(DubinsPath, f64)> {
        let p = DubinsPath::shortest(
            (a.position.x, a.position.y, a.yaw()),
            (b.position.x, b.position.y, b.yaw()),
            self.turn_radius(),
        )?;
        let len = p.length();
        Some((p, len))
    }

    /// Local path from `a` to `b`, or `None` when no feasible connection exists.
    pub fn connect(&self, a: &Configuration, b: &Configuration) -> Option<LocalPath> {
        match self.kind {
            VehicleKind::Holonomic => Some(self.connect_holonomic(a, b)),
            VehicleKind::Nonholonomic => self.connect_dubins(a, b),
        }
    }

    fn connect_holonomic(&self, a: &Configuration, b: &Configuration) -> LocalPath {
        let dist = a.position.distance(b.position);
        let dyaw = angle_diff(a.yaw(), b.yaw());
        let cost = (dist / self.v_max).max(dyaw.abs() / self.yaw_rate_max);
        let n = ((dist / WAYPOINT_SPACING).ceil() as usize)
            .max((dyaw.abs() / YAW_SPACING).ceil() as usize)
            .max(1);
        let mut waypoints: Vec<Configuration> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                Configuration::new(a.position.lerp(b.position, s), a.yaw() + dyaw * s)
            })
            .collect();
        waypoints[0] = *a;
        waypoints[n] = *b;
        LocalPath {
            start: *a,
            end: *b,
            waypoints,
            cost,
            length: dist,
            straight: true,
        }
    }

    fn connect_dubins(&self, a: &Configuration, b: &Configuration) -> Option<LocalPath> {
        let (path, planar) = self.dubins(a, b)?;
        let dz = b.position.z - a.position.z;
        let length = planar.hypot(dz);
        let n = ((length / WAYPOINT_SPACING).ceil() as usize).max(1);
        let mut waypoints: Vec<Configuration> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                let (x, y, h) = path.sample(planar * s);
                Configuration::new(Vec3::new(x, y, a.position.z + dz * s), wrap_angle(h))
            })
            .collect();
        waypoints[0] = *a;
        waypoints[n] = *b;
        let straight = path.params[0] * path.radius < 1e-9
            && path.params[2] * path.radius < 1e-9
            && matches!(path.word.segments()[1], dubins::Segment::Straight);
        Some(LocalPath {
            start: *a,
            end: *b,
            waypoints,
            cost: length / self.v_max,
            length,
            straight,
        })
    }

    /// Sum of connection costs along `path`; `f64::INFINITY` if any pair is infeasible.
    pub fn path_cost(&self, path: &[Configuration]) -> f64 {
        path.windows(2)
            .map(|w| self.connect_cost(&w[0], &w[1]).unwrap_or(f64::INFINITY))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cfg(x: f64, y: f64, z: f64, yaw: f64) -> Configuration {
        Configuration::from_xyz(x, y, z, yaw)
    }

    #[test]
    fn holonomic_pure_yaw() {
        let v = VehicleModel::holonomic(0.25, 0.5);
        let p = v.connect(&cfg(0.0, 0.0, 0.0, 0.0), &cfg(0.0, 0.0, 0.0, FRAC_PI_2)).unwrap();
        assert!((p.cost - PI).abs() < 1e-12);
    }

    #[test]
    fn holonomic_translation() {
        let v = VehicleModel::holonomic(0.25, 0.5);
        let p = v.connect(&cfg(0.0, 0.0, 0.0, 0.0), &cfg(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((p.cost - 4.0).abs() < 1e-12);
        assert_eq!(p.waypoints.first(), Some(&p.start));
        assert_eq!(p.waypoints.last(), Some(&p.end));
        for w in p.waypoints.windows(2) {
            assert!(w[0].position.distance(w[1].position) <= WAYPOINT_SPACING + 1e-12);
        }
    }

    #[test]
    fn identical_configurations_cost_nothing() {
        for v in [VehicleModel::holonomic(0.25, 0.5), VehicleModel::nonholonomic(0.25, 0.5)] {
            let c = cfg(1.0, 2.0, 3.0, 0.4);
            assert_eq!(v.connect(&c, &c).unwrap().cost, 0.0);
        }
    }

    #[test]
    fn path_cost_right_angle() {
        let v = VehicleModel::holonomic(0.25, 0.5);
        let path = [cfg(0.0, 0.0, 0.0, 0.0), cfg(1.0, 0.0, 0.0, 0.0), cfg(1.0, 1.0, 0.0, FRAC_PI_2)];
        assert!((v.path_cost(&path) - 8.0).abs() < 1e-12);
        assert_eq!(v.path_cost(&path[..1]), 0.0);
    }

    #[test]
    fn dubins_straight_ahead() {
        let v = VehicleModel::nonholonomic(0.25, 0.5);
        let p = v.connect(&cfg(0.0, 0.0, 1.0, 0.0), &cfg(10.0, 0.0, 1.0, 0.0)).unwrap();
        assert!((p.cost - 40.0).abs() < 1e-9);
        assert!(p.straight);
    }

    #[test]
    fn dubins_waypoints_follow_tangent() {
        let v = VehicleModel::nonholonomic(0.25, 0.5);
        let a = cfg(0.0, 0.0, 1.0, 0.3);
        let b = cfg(-1.0, 0.7, 1.6, -2.0);
        let p = v.connect(&a, &b).unwrap();
        for w in p.waypoints.windows(2) {
            let d = w[0].position.distance(w[1].position);
            assert!(d <= WAYPOINT_SPACING + 1e-9);
            if d > 1e-3 {
                let dir = (w[1].position - w[0].position).normalize();
                let h = Vec3::new(w[0].yaw().cos(), w[0].yaw().sin(), 0.0);
                // heading roughly tangent (sampling offset allowed)
                assert!(dir.dot(h) > 0.8);
            }
        }
        assert!(p.cost * v.v_max >= a.position.distance(b.position) - 1e-9);
    }
}
