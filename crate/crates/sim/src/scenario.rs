//! Scenario files: strict JSON with documented defaults.

use std::fs;
use std::path::{Path, PathBuf};

use inspect_core::belief::{Landmark, NoiseParams};
use inspect_core::contact::{Point2, SurfaceTask};
use inspect_core::nbv::{ExploreParams, TreeParams};
use inspect_core::occupancy::MapParams;
use inspect_core::rhem::RhemParams;
use inspect_core::rrtot::RrtotParams;
use inspect_core::search::SearchParams;
use inspect_core::sensor::SensorModel;
use inspect_core::sip::SipParams;
use inspect_core::uc3d::UniformityParams;
use inspect_core::vehicle::{VehicleKind, VehicleModel};
use inspect_core::{Aabb, Configuration, Vec3};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sip,
    Rrtot,
    Uc3d,
    Nbv,
    Rhem,
    Contact,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sip => "sip",
            Mode::Rrtot => "rrtot",
            Mode::Uc3d => "uc3d",
            Mode::Nbv => "nbv",
            Mode::Rhem => "rhem",
            Mode::Contact => "contact",
        }
    }

    pub fn is_inspection(self) -> bool {
        matches!(self, Mode::Sip | Mode::Rrtot | Mode::Uc3d)
    }
}

/// One planning mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mode: Mode,
    pub seed: u64,
    /// Mesh to inspect (sip, rrtot, uc3d). Relative paths resolve against the scenario file.
    #[serde(default)]
    pub structure: Option<PathBuf>,
    /// Environment mesh: obstacles for inspection modes, the explored world for nbv and rhem.
    #[serde(default)]
    pub world: Option<PathBuf>,
    /// Output directory used when `--out` is not given.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub vehicle: VehicleConfig,
    /// Start pose (rrtot, nbv, rhem).
    #[serde(default)]
    pub start: Option<Pose>,
    /// Occupancy map (nbv, rhem).
    #[serde(default)]
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub sip: SipConfig,
    #[serde(default)]
    pub rrtot: RrtotConfig,
    #[serde(default)]
    pub uc3d: Uc3dConfig,
    #[serde(default)]
    pub nbv: NbvConfig,
    #[serde(default)]
    pub rhem: RhemConfig,
    /// Surface task (contact).
    #[serde(default)]
    pub contact: Option<ContactConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// rad
    #[serde(default)]
    pub yaw: f64,
}

impl Pose {
    pub fn config(&self) -> Configuration {
        Configuration::from_xyz(self.x, self.y, self.z, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    /// m
    pub d_min: f64,
    /// m
    pub d_max: f64,
    pub max_incidence_deg: f64,
    /// Mounting pitch, negative looks down.
    pub pitch_deg: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        let s = SensorModel::default();
        Self {
            hfov_deg: s.hfov.to_degrees().round(),
            vfov_deg: s.vfov.to_degrees().round(),
            d_min: s.d_min,
            d_max: s.d_max,
            max_incidence_deg: s.max_incidence.to_degrees().round(),
            pitch_deg: s.pitch.to_degrees().round(),
        }
    }
}

impl SensorConfig {
    pub fn model(&self) -> SensorModel {
        SensorModel {
            hfov: self.hfov_deg.to_radians(),
            vfov: self.vfov_deg.to_radians(),
            d_min: self.d_min,
            d_max: self.d_max,
            max_incidence: self.max_incidence_deg.to_radians(),
            pitch: self.pitch_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKindConfig {
    Holonomic,
    Nonholonomic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleConfig {
    pub kind: VehicleKindConfig,
    /// m/s
    pub v_max: f64,
    /// rad/s
    pub yaw_rate: f64,
    /// m
    pub clearance: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        let v = VehicleModel::default();
        Self {
            kind: VehicleKindConfig::Holonomic,
            v_max: v.v_max,
            yaw_rate: v.yaw_rate_max,
            clearance: v.clearance,
        }
    }
}

impl VehicleConfig {
    pub fn model(&self) -> VehicleModel {
        VehicleModel {
            kind: match self.kind {
                VehicleKindConfig::Holonomic => VehicleKind::Holonomic,
                VehicleKindConfig::Nonholonomic => VehicleKind::Nonholonomic,
            },
            v_max: self.v_max,
            yaw_rate_max: self.yaw_rate,
            clearance: self.clearance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// Voxel edge, m.
    pub resolution: f64,
    pub min: [f64; 3],
    pub max: [f64; 3],
    /// Box over which the known fraction is reported; defaults to the map bounds.
    #[serde(default)]
    pub region_min: Option<[f64; 3]>,
    #[serde(default)]
    pub region_max: Option<[f64; 3]>,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl MapConfig {
    pub fn params(&self) -> MapParams {
        MapParams::new(self.resolution, Aabb::new(vec3(self.min), vec3(self.max)))
    }

    pub fn region(&self) -> Option<Aabb> {
        match (self.region_min, self.region_max) {
            (Some(lo), Some(hi)) => Some(Aabb::new(vec3(lo), vec3(hi))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SipConfig {
    pub iterations: usize,
    pub candidates: usize,
    /// m
    pub max_view_distance: f64,
    pub tour_restarts: usize,
    /// RRT* iterations per viewpoint connection.
    pub search_iterations: usize,
}

impl Default for SipConfig {
    fn default() -> Self {
        let p = SipParams::default();
        Self {
            iterations: p.iterations,
            candidates: p.candidates,
            max_view_distance: p.max_view_distance,
            tour_restarts: p.tour_restarts,
            search_iterations: p.search.max_iterations,
        }
    }
}

impl SipConfig {
    pub fn params(&self) -> SipParams {
        SipParams {
            iterations: self.iterations,
            candidates: self.candidates,
            max_view_distance: self.max_view_distance,
            tour_restarts: self.tour_restarts,
            search: SearchParams {
                max_iterations: self.search_iterations,
                ..SearchParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RrtotConfig {
    pub iterations: usize,
    pub checkpoint: usize,
    pub p_new: f64,
    /// m
    pub step: f64,
    /// m
    pub margin: f64,
    pub tour_restarts: usize,
    pub cover_trials: usize,
}

impl Default for RrtotConfig {
    fn default() -> Self {
        let p = RrtotParams::default();
        Self {
            iterations: p.iterations,
            checkpoint: p.checkpoint,
            p_new: p.p_new,
            step: p.step,
            margin: p.margin,
            tour_restarts: p.tour_restarts,
            cover_trials: p.cover_trials,
        }
    }
}

impl RrtotConfig {
    pub fn params(&self) -> RrtotParams {
        RrtotParams {
            iterations: self.iterations,
            checkpoint: self.checkpoint,
            p_new: self.p_new,
            step: self.step,
            margin: self.margin,
            tour_restarts: self.tour_restarts,
            cover_trials: self.cover_trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct Uc3dConfig {
    /// Target viewing distance, m; defaults to the sensor's `d_min + 0.15`.
    pub distance: Option<f64>,
    /// m
    pub distance_band: f64,
    pub max_angle_deg: f64,
    /// Face count of the subsampled mesh; `null` keeps the mesh as is.
    pub target_faces: Option<usize>,
    pub max_restarts: usize,
    pub tour_restarts: usize,
}

impl Default for Uc3dConfig {
    fn default() -> Self {
        let p = UniformityParams::for_sensor(&SensorModel::default());
        Self {
            distance: None,
            distance_band: p.distance_band,
            max_angle_deg: p.max_angle.to_degrees().round(),
            target_faces: None,
            max_restarts: 20,
            tour_restarts: 3,
        }
    }
}

impl Uc3dConfig {
    pub fn params(&self, sensor: &SensorModel) -> UniformityParams {
        UniformityParams {
            distance: self.distance.unwrap_or(sensor.d_min + 0.15),
            distance_band: self.distance_band,
            max_angle: self.max_angle_deg.to_radians(),
            target_faces: self.target_faces,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NbvConfig {
    /// Tree nodes per step.
    pub nodes: usize,
    /// m
    pub max_edge: f64,
    /// Gain discount per second of travel.
    pub lambda: f64,
    /// m^3
    pub min_gain: f64,
    pub max_steps: usize,
    pub rays_h: usize,
    pub rays_v: usize,
}

impl Default for NbvConfig {
    fn default() -> Self {
        let p = ExploreParams::default();
        Self {
            nodes: p.tree.nodes,
            max_edge: p.tree.max_edge,
            lambda: p.tree.lambda,
            min_gain: p.min_gain,
            max_steps: p.max_steps,
            rays_h: p.rays_h,
            rays_v: p.rays_v,
        }
    }
}

impl NbvConfig {
    pub fn params(&self, region: Option<Aabb>) -> ExploreParams {
        ExploreParams {
            tree: TreeParams {
                nodes: self.nodes,
                max_edge: self.max_edge,
                lambda: self.lambda,
                ..TreeParams::default()
            },
            min_gain: self.min_gain,
            max_steps: self.max_steps,
            rays_h: self.rays_h,
            rays_v: self.rays_v,
            region,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RhemConfig {
    pub w_explore: f64,
    pub w_reobs: f64,
    /// Second-layer candidate paths per step.
    pub branches: usize,
    /// Odometry variances per meter: x, y, z (m^2) and yaw (rad^2).
    pub odometry_var: [f64; 4],
    pub bearing_sigma_deg: f64,
    /// RRT* iterations per second-layer path.
    pub search_iterations: usize,
    pub pose_var: [f64; 4],
    pub landmark_var: f64,
    /// Landmark positions, m; ids follow list order.
    pub landmarks: Vec<[f64; 3]>,
}

impl Default for RhemConfig {
    fn default() -> Self {
        let p = RhemParams::default();
        Self {
            w_explore: p.w_explore,
            w_reobs: p.w_reobs,
            branches: p.branches,
            odometry_var: p.noise.odometry,
            bearing_sigma_deg: p.noise.bearing_sigma.to_degrees(),
            search_iterations: p.search.max_iterations,
            pose_var: p.pose_var,
            landmark_var: p.landmark_var,
            landmarks: Vec::new(),
        }
    }
}

impl RhemConfig {
    pub fn params(&self, explore: ExploreParams) -> RhemParams {
        let d = RhemParams::default();
        RhemParams {
            explore,
            w_explore: self.w_explore,
            w_reobs: self.w_reobs,
            branches: self.branches,
            noise: NoiseParams {
                odometry: self.odometry_var,
                bearing_sigma: self.bearing_sigma_deg.to_radians(),
            },
            search: SearchParams {
                max_iterations: self.search_iterations,
                ..d.search
            },
            pose_var: self.pose_var,
            landmark_var: self.landmark_var,
        }
    }

    pub fn landmarks(&self) -> Vec<Landmark> {
        self.landmarks
            .iter()
            .enumerate()
            .map(|(i, p)| Landmark {
                id: i as u32,
                position: vec3(*p),
                active: true,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    /// Surface-frame origin, m.
    pub origin: [f64; 3],
    pub normal: [f64; 3],
    /// Points of interest in surface coordinates, m.
    pub pois: Vec<[f64; 2]>,
    /// No-contact polygons in surface coordinates, m.
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    /// Undocking stand-off, m.
    pub clearance: f64,
    /// m/s
    pub contact_speed: f64,
    /// m/s
    pub flight_speed: f64,
    /// Index of the first point of interest.
    #[serde(default)]
    pub start: usize,
    #[serde(default = "default_contact_restarts")]
    pub restarts: usize,
}

fn default_contact_restarts() -> usize {
    5
}

impl ContactConfig {
    pub fn task(&self) -> SurfaceTask {
        let p2 = |p: &[f64; 2]| Point2::new(p[0], p[1]);
        SurfaceTask {
            origin: vec3(self.origin),
            normal: vec3(self.normal),
            pois: self.pois.iter().map(p2).collect(),
            obstacles: self.obstacles.iter().map(|o| o.iter().map(p2).collect()).collect(),
            clearance: self.clearance,
            contact_speed: self.contact_speed,
            flight_speed: self.flight_speed,
        }
    }
}

/// Parses scenario JSON, reporting the key path of the first violation.
pub fn parse_scenario(text: &str) -> Result<Scenario, SimError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| SimError::Schema {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })
}

/// Reads, parses and validates a scenario, resolving mesh paths against
/// the scenario's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, SimError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SimError::MissingFile(path.to_path_buf()),
        _ => SimError::Io(e.to_string()),
    })?;
    let mut s = parse_scenario(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut s.structure, &mut s.world].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    s.validate()?;
    Ok(s)
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        for p in [&self.structure, &self.world].into_iter().flatten() {
            if !p.is_file() {
                return Err(SimError::MissingFile(p.clone()));
            }
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::invalid(what, format!("required in {} mode", self.mode.as_str())))
            }
        };
        let range = |ok: bool, what: &str, why: &str| if ok { Ok(()) } else { Err(SimError::invalid(what, why)) };
        self.sensor.model().validate().map_err(|e| SimError::invalid("sensor", e.to_string()))?;
        self.vehicle.model().validate().map_err(|e| SimError::invalid("vehicle", e.to_string()))?;
        match self.mode {
            Mode::Sip => {
                need(self.structure.is_some(), "structure")?;
                range(self.sip.iterations >= 1, "sip.iterations", "must be at least 1")?;
                range(self.sip.candidates >= 1, "sip.candidates", "must be at least 1")?;
                range(self.sip.max_view_distance > 0.0, "sip.max_view_distance", "must be positive")?;
            }
            Mode::Rrtot => {
                need(self.structure.is_some(), "structure")?;
                need(self.start.is_some(), "start")?;
                range(self.rrtot.checkpoint >= 1, "rrtot.checkpoint", "must be at least 1")?;
                range((0.0..=1.0).contains(&self.rrtot.p_new), "rrtot.p_new", "must lie in [0, 1]")?;
                range(self.rrtot.step > 0.0, "rrtot.step", "must be positive")?;
            }
            Mode::Uc3d => {
                need(self.structure.is_some(), "structure")?;
                range(self.uc3d.max_restarts >= 1, "uc3d.max_restarts", "must be at least 1")?;
                let sensor = self.sensor.model();
                self.uc3d.params(&sensor).validate(&sensor).map_err(|e| SimError::invalid("uc3d", e.to_string()))?;
            }
            Mode::Nbv | Mode::Rhem => {
                need(self.world.is_some(), "world")?;
                need(self.start.is_some(), "start")?;
                let map = self.map.as_ref().ok_or_else(|| SimError::invalid("map", "required in exploration modes"))?;
                range(map.resolution > 0.0, "map.resolution", "must be positive")?;
                range((0..3).all(|i| map.min[i] < map.max[i]), "map", "min must lie below max")?;
                range(map.region_min.is_some() == map.region_max.is_some(), "map.region_min", "region needs both corners")?;
                range(self.nbv.nodes >= 1, "nbv.nodes", "must be at least 1")?;
                range(self.nbv.max_edge > 0.0, "nbv.max_edge", "must be positive")?;
                range(self.nbv.lambda >= 0.0, "nbv.lambda", "must be non-negative")?;
                range(self.nbv.rays_h >= 1 && self.nbv.rays_v >= 1, "nbv.rays_h", "must be at least 1")?;
                if self.mode == Mode::Rhem {
                    range(self.rhem.branches >= 1, "rhem.branches", "must be at least 1")?;
                    range(self.rhem.odometry_var.iter().all(|v| *v >= 0.0), "rhem.odometry_var", "must be non-negative")?;
                    range(self.rhem.pose_var.iter().all(|v| *v > 0.0), "rhem.pose_var", "must be positive")?;
                    range(self.rhem.landmark_var > 0.0, "rhem.landmark_var", "must be positive")?;
                    range(self.rhem.bearing_sigma_deg >= 0.0, "rhem.bearing_sigma_deg", "must be non-negative")?;
                }
            }
            Mode::Contact => {
                let c = self.contact.as_ref().ok_or_else(|| SimError::invalid("contact", "required in contact mode"))?;
                range(!c.pois.is_empty(), "contact.pois", "must not be empty")?;
                range(c.start < c.pois.len(), "contact.start", "must index a point of interest")?;
                range(c.contact_speed > 0.0 && c.flight_speed > 0.0, "contact.contact_speed", "speeds must be positive")?;
                range(c.clearance >= 0.0, "contact.clearance", "must be non-negative")?;
                range(vec3(c.normal).norm() > 0.0, "contact.normal", "must be non-zero")?;
                range(c.obstacles.iter().all(|o| o.len() >= 3), "contact.obstacles", "polygons need three vertices")?;
            }
        }
        Ok(())
    }
}
