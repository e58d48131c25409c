//! Pose and landmark belief for uncertainty-aware planning.
//!
//! The state is `[x, y, z, yaw, l1.x, l1.y, l1.z, ...]` with landmarks in
//! ascending id order. The mean follows the planned path; only the
//! covariance is propagated.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

use crate::sensor::SensorModel;
use crate::vehicle::LocalPath;
use crate::{Configuration, TriangleMesh, Vec3};

/// Bearing noise floor, rad. Keeps the innovation covariance invertible
/// when a noise-free sensor is requested.
pub const MIN_BEARING_SIGMA: f64 = 1e-4;

/// Covariances whose smallest eigenvalue is at or below this are rejected.
pub const SPD_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("covariance is not symmetric positive definite")]
    NotSpd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: u32,
    pub position: Vec3,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Odometry variances per meter traveled: x, y, z (m^2) and yaw (rad^2).
    pub odometry: [f64; 4],
    /// Bearing noise standard deviation, rad.
    pub bearing_sigma: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            odometry: [0.01f64.powi(2), 0.01f64.powi(2), 0.01f64.powi(2), 0.5f64.to_radians().powi(2)],
            bearing_sigma: 1f64.to_radians(),
        }
    }
}

impl NoiseParams {
    pub fn zero() -> Self {
        Self {
            odometry: [0.0; 4],
            bearing_sigma: 0.0,
        }
    }

    fn bearing_variance(&self) -> f64 {
        self.bearing_sigma.max(MIN_BEARING_SIGMA).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Ids of the tracked landmarks, ascending, matching the state blocks.
    pub landmark_ids: Vec<u32>,
}

impl Belief {
    /// Belief at `pose` with diagonal pose variances and the active
    /// landmarks at their positions with isotropic variance.
    pub fn new(pose: &Configuration, pose_var: [f64; 4], landmarks: &[Landmark], landmark_var: f64) -> Self {
        let mut active: Vec<&Landmark> = landmarks.iter().filter(|l| l.active).collect();
        active.sort_by_key(|l| l.id);
        let n = 4 + 3 * active.len();
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        let p = pose.position;
        mean[0] = p.x;
        mean[1] = p.y;
        mean[2] = p.z;
        mean[3] = pose.yaw();
        for (i, v) in pose_var.iter().enumerate() {
            cov[(i, i)] = *v;
        }
        for (k, l) in active.iter().enumerate() {
            for a in 0..3 {
                mean[4 + 3 * k + a] = l.position.get(a);
                cov[(4 + 3 * k + a, 4 + 3 * k + a)] = landmark_var;
            }
        }
        Self {
            mean,
            cov,
            landmark_ids: active.iter().map(|l| l.id).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn pose(&self) -> Configuration {
        Configuration::from_xyz(self.mean[0], self.mean[1], self.mean[2], self.mean[3])
    }

    pub fn landmark(&self, k: usize) -> Vec3 {
        let o = 4 + 3 * k;
        Vec3::new(self.mean[o], self.mean[o + 1], self.mean[o + 2])
    }

    pub fn pose_cov(&self) -> DMatrix<f64> {
        self.cov.view((0, 0), (4, 4)).into_owned()
    }

    fn set_pose(&mut self, c: &Configuration) {
        self.mean[0] = c.position.x;
        self.mean[1] = c.position.y;
        self.mean[2] = c.position.z;
        self.mean[3] = c.yaw();
    }

    /// Odometry prediction from the current pose to `to`. The position
    /// Jacobian couples to yaw through the body-frame displacement.
    pub fn predict(&mut self, to: &Configuration, noise: &NoiseParams) {
        let from = self.pose();
        let d = to.position - from.position;
        let n = self.dim();
        let mut f = DMatrix::<f64>::identity(4, 4);
        f[(0, 3)] = -d.y;
        f[(1, 3)] = d.x;
        let dist = d.norm();
        let pp = self.cov.view((0, 0), (4, 4)).into_owned();
        let mut new_pp = &f * pp * f.transpose();
        for i in 0..4 {
            new_pp[(i, i)] += noise.odometry[i] * dist;
        }
        if n > 4 {
            let pl = self.cov.view((0, 4), (4, n - 4)).into_owned();
            let new_pl = &f * pl;
            self.cov.view_mut((0, 4), (4, n - 4)).copy_from(&new_pl);
            self.cov.view_mut((4, 0), (n - 4, 4)).copy_from(&new_pl.transpose());
        }
        self.cov.view_mut((0, 0), (4, 4)).copy_from(&new_pp);
        self.set_pose(to);
        symmetrize(&mut self.cov);
    }

    /// Body-frame unit bearing to landmark `k` and its Jacobians with
    /// respect to the pose (3x4) and the landmark (3x3).
    pub fn bearing(&self, k: usize) -> (Vector3<f64>, nalgebra::Matrix3x4<f64>, Matrix3<f64>) {
        let pose = self.pose();
        let l = self.landmark(k);
        let d = Vector3::new(l.x - pose.position.x, l.y - pose.position.y, l.z - pose.position.z);
        let r = d.norm();
        let u = d / r;
        let (s, c) = pose.yaw().sin_cos();
        let rt = Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
        let drt = Matrix3::new(-s, c, 0.0, -c, -s, 0.0, 0.0, 0.0, 0.0);
        let du = (Matrix3::identity() - u * u.transpose()) / r;
        let h_l = rt * du;
        let mut h_p = nalgebra::Matrix3x4::zeros();
        h_p.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-h_l));
        h_p.fixed_view_mut::<3, 1>(0, 3).copy_from(&(drt * u));
        (rt * u, h_p, h_l)
    }

    /// Zero-innovation bearing update for landmark `k`, touching only the
    /// pose and landmark columns of the measurement Jacobian.
    pub fn update(&mut self, k: usize, noise: &NoiseParams) -> Result<(), BeliefError> {
        let (_, h_p, h_l) = self.bearing(k);
        let n = self.dim();
        let idx: Vec<usize> = (0..4).chain(4 + 3 * k..4 + 3 * k + 3).collect();
        let mut hs = DMatrix::<f64>::zeros(3, 7);
        hs.view_mut((0, 0), (3, 4)).copy_from(&h_p);
        hs.view_mut((0, 4), (3, 3)).copy_from(&h_l);
        let p_cols = DMatrix::from_fn(n, 7, |i, j| self.cov[(i, idx[j])]);
        let p_sub = DMatrix::from_fn(7, 7, |i, j| self.cov[(idx[i], idx[j])]);
        let pht = &p_cols * hs.transpose();
        let s = &hs * p_sub * hs.transpose() + DMatrix::<f64>::identity(3, 3) * noise.bearing_variance();
        let s_inv = s.cholesky().ok_or(BeliefError::NotSpd)?.inverse();
        let gain = &pht * s_inv;
        self.cov -= &gain * pht.transpose();
        symmetrize(&mut self.cov);
        Ok(())
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Geometric mean of the eigenvalues, via a Cholesky log-determinant.
pub fn d_optimality(cov: &DMatrix<f64>) -> Result<f64, BeliefError> {
    let n = cov.nrows();
    if n == 0 || n != cov.ncols() {
        return Err(BeliefError::NotSpd);
    }
    let chol = cov.clone().cholesky().ok_or(BeliefError::NotSpd)?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    Ok((log_det / n as f64).exp())
}

pub fn min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    cov.clone().symmetric_eigen().eigenvalues.min()
}

pub fn check_spd(cov: &DMatrix<f64>) -> Result<(), BeliefError> {
    if cov.nrows() == 0 || (cov - cov.transpose()).amax() > 1e-9 * cov.amax().max(1.0) {
        return Err(BeliefError::NotSpd);
    }
    if min_eigenvalue(cov) > SPD_EPSILON {
        Ok(())
    } else {
        Err(BeliefError::NotSpd)
    }
}

/// Tracked landmarks (state indices) visible from `config`.
pub fn visible_landmarks(belief: &Belief, config: &Configuration, sensor: &SensorModel, world: Option<&TriangleMesh>) -> Vec<usize> {
    (0..belief.landmark_ids.len())
        .filter(|&k| sensor.point_visible(config, belief.landmark(k), world))
        .collect()
}

/// Predicts through each consecutive configuration and updates with every
/// landmark visible at the new configuration.
pub fn propagate_steps(
    belief: &Belief,
    configs: &[Configuration],
    sensor: &SensorModel,
    world: Option<&TriangleMesh>,
    noise: &NoiseParams,
) -> Result<Belief, BeliefError> {
    check_spd(&belief.cov)?;
    let mut b = belief.clone();
    for c in configs.iter().skip(1) {
        b.predict(c, noise);
        for k in visible_landmarks(&b, c, sensor, world) {
            b.update(k, noise)?;
        }
    }
    Ok(b)
}

/// [`propagate_steps`] over the waypoints of a local path.
pub fn propagate_belief(
    belief: &Belief,
    path: &LocalPath,
    sensor: &SensorModel,
    world: Option<&TriangleMesh>,
    noise: &NoiseParams,
) -> Result<Belief, BeliefError> {
    propagate_steps(belief, &path.waypoints, sensor, world, noise)
}
