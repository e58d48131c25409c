//! Two-layer exploration: the first layer picks the most informative view,
//! the second picks the path towards it that leaves the least uncertain
//! pose and landmark belief.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::belief::{d_optimality, min_eigenvalue, propagate_steps, visible_landmarks, Belief, BeliefError, Landmark, NoiseParams};
use crate::nbv::{build_view_tree, node_gain, sense, ExploreError, ExploreParams, MapSpace};
use crate::occupancy::{MapParams, OccupancyMap, VoxelState};
use crate::search::{rrt_star, FreeSpace, MeshSpace, PlannedPath, SearchParams};
use crate::sensor::SensorModel;
use crate::vehicle::VehicleModel;
use crate::{Configuration, TriangleMesh};

/// Observation count at which a voxel earns no reobservation reward.
pub const C_SAT: u32 = 10;

/// Sum over visible observed voxels of `1 - count / C_SAT` (floored at 0).
pub fn reobservation_gain(map: &OccupancyMap, config: &Configuration, sensor: &SensorModel) -> f64 {
    let mut total = 0.0;
    map.for_each_visible(config, sensor, |s| s != VoxelState::Unknown, |k, _| {
        let count = map.voxel(k).map_or(0, |(_, c)| c);
        total += (1.0 - count as f64 / C_SAT as f64).max(0.0);
    });
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhemParams {
    pub explore: ExploreParams,
    pub w_explore: f64,
    pub w_reobs: f64,
    /// Second-layer candidate paths per step, including the first-layer edge.
    pub branches: usize,
    pub noise: NoiseParams,
    /// Budget of each second-layer path search.
    pub search: SearchParams,
    pub pose_var: [f64; 4],
    pub landmark_var: f64,
}

impl Default for RhemParams {
    fn default() -> Self {
        Self {
            explore: ExploreParams::default(),
            w_explore: 1.0,
            w_reobs: 0.01,
            branches: 4,
            noise: NoiseParams::default(),
            search: SearchParams {
                max_iterations: 300,
                goal_bias: 0.1,
                ..SearchParams::default()
            },
            pose_var: [1e-4, 1e-4, 1e-4, 1e-4],
            landmark_var: 1e-2,
        }
    }
}

/// A second-layer candidate after belief propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub path: PlannedPath,
    pub belief: Belief,
    pub d_opt: f64,
    pub min_eigenvalue: f64,
}

/// Configurations along a planned path, without repeated joints.
pub fn path_configurations(path: &PlannedPath) -> Vec<Configuration> {
    let mut out: Vec<Configuration> = Vec::new();
    for leg in &path.legs {
        for w in &leg.waypoints {
            if out.last() != Some(w) {
                out.push(*w);
            }
        }
    }
    if out.is_empty() {
        out.extend(path.configurations.first().copied());
    }
    out
}

/// Seed of candidate `k` at step `step`, independent of the planner's own
/// random stream.
pub fn candidate_seed(seed: u64, step: usize, k: usize) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((step as u64) << 16) | k as u64);
    r.gen()
}

/// Up to `count` admissible paths `from -> to` through the map's free space,
/// each from its own search seed. Paths that do not end exactly at `to` are
/// dropped.
#[allow(clippy::too_many_arguments)]
pub fn sample_candidate_paths(
    map: &OccupancyMap,
    vehicle: &VehicleModel,
    from: &Configuration,
    to: &Configuration,
    count: usize,
    search: &SearchParams,
    seed: u64,
    step: usize,
) -> Vec<PlannedPath> {
    let space = MapSpace {
        map,
        clearance: vehicle.clearance,
    };
    let params = SearchParams {
        bounds: Some(*map.bounds()),
        ..*search
    };
    (0..count)
        .filter_map(|k| rrt_star(vehicle, &space, from, to, &params, candidate_seed(seed, step, k + 1)).ok())
        .filter(|p| p.configurations.last() == Some(to))
        .collect()
}

/// Propagates `belief` along each candidate and returns the index of the
/// minimum D-optimality (lowest index on ties) with all evaluations.
pub fn select_candidate(
    belief: &Belief,
    candidates: Vec<PlannedPath>,
    sensor: &SensorModel,
    world: Option<&TriangleMesh>,
    noise: &NoiseParams,
) -> Result<(usize, Vec<Evaluated>), BeliefError> {
    let mut evals = Vec::with_capacity(candidates.len());
    for path in candidates {
        let b = propagate_steps(belief, &path_configurations(&path), sensor, world, noise)?;
        let d_opt = d_optimality(&b.cov)?;
        let min_eigenvalue = min_eigenvalue(&b.cov);
        evals.push(Evaluated {
            path,
            belief: b,
            d_opt,
            min_eigenvalue,
        });
    }
    let mut best = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.d_opt < evals[best].d_opt {
            best = i;
        }
    }
    Ok((best, evals))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhemStep {
    pub step: usize,
    /// Configuration after executing the step.
    pub config: Configuration,
    /// Best first-layer branch value.
    pub gain: f64,
    pub known_fraction: f64,
    /// Index of the executed second-layer candidate (0 is the first-layer edge).
    pub chosen: usize,
    pub candidate_d_opts: Vec<f64>,
    pub d_opt_chosen: f64,
    pub d_opt_best_alternative: Option<f64>,
    pub landmarks_visible: usize,
    pub min_eigenvalue: f64,
    /// No extra second-layer path was found; the first-layer edge was used.
    pub fallback: bool,
    pub path: Option<PlannedPath>,
}

#[derive(Debug, Clone)]
pub struct RhemLog {
    pub steps: Vec<RhemStep>,
    pub map: OccupancyMap,
    pub belief: Belief,
    pub stuck: bool,
}

impl RhemLog {
    /// CSV with header
    /// `step,x,y,z,yaw,gain,known_fraction,d_opt_chosen,d_opt_best_alternative,n_landmarks_visible`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,x,y,z,yaw,gain,known_fraction,d_opt_chosen,d_opt_best_alternative,n_landmarks_visible")?;
        for s in &self.steps {
            let p = s.config.position;
            let alt = s.d_opt_best_alternative.map_or(String::new(), |v| format!("{v:.9e}"));
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.9e},{},{}",
                s.step,
                p.x,
                p.y,
                p.z,
                s.config.yaw(),
                s.gain,
                s.known_fraction,
                s.d_opt_chosen,
                alt,
                s.landmarks_visible
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RhemError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Uncertainty-aware exploration loop.
#[allow(clippy::too_many_arguments)]
pub fn explore_uncertainty_aware(
    world: &TriangleMesh,
    start: Configuration,
    sensor: &SensorModel,
    vehicle: &VehicleModel,
    landmarks: &[Landmark],
    map_params: MapParams,
    params: &RhemParams,
    seed: u64,
) -> Result<RhemLog, RhemError> {
    if !MeshSpace::new(world, vehicle.clearance).point_free(start.position) {
        return Err(ExploreError::StartInCollision.into());
    }
    let ex = &params.explore;
    let mut map = OccupancyMap::new(map_params).map_err(ExploreError::from)?;
    let region = ex.region.unwrap_or(*map.bounds());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut belief = Belief::new(&start, params.pose_var, landmarks, params.landmark_var);
    let mut current = start;
    let mut steps = Vec::new();
    let mut stuck = false;
    for step in 0..ex.max_steps {
        sense(&mut map, world, &current, sensor, ex.rays_h, ex.rays_v).map_err(ExploreError::from)?;
        let known = map.known_fraction(&region);
        let gain = |c: &Configuration| {
            let mut g = params.w_explore * node_gain(&map, c, sensor);
            if params.w_reobs != 0.0 {
                g += params.w_reobs * reobservation_gain(&map, c, sensor);
            }
            g
        };
        let tree = build_view_tree(&map, vehicle, current, &ex.tree, gain, &mut rng)?;
        let best = tree.best_node();
        let value = tree.nodes[best].value;
        let target = if value < ex.min_gain {
            None
        } else {
            tree.first_step(best).or_else(|| tree.best_root_child())
        };
        let Some(first) = target else {
            stuck = value >= ex.min_gain;
            let d = d_optimality(&belief.cov)?;
            steps.push(RhemStep {
                step,
                config: current,
                gain: value,
                known_fraction: known,
                chosen: 0,
                candidate_d_opts: Vec::new(),
                d_opt_chosen: d,
                d_opt_best_alternative: None,
                landmarks_visible: visible_landmarks(&belief, &current, sensor, Some(world)).len(),
                min_eigenvalue: min_eigenvalue(&belief.cov),
                fallback: false,
                path: None,
            });
            break;
        };
        let goal = tree.nodes[first].config;
        let edge = vehicle.connect(&current, &goal).expect("tree edges are feasible");
        let mut candidates = vec![PlannedPath::from_legs(vec![edge])];
        let extra = params.branches.saturating_sub(1);
        let others = if extra > 0 {
            sample_candidate_paths(&map, vehicle, &current, &goal, extra, &params.search, seed, step)
        } else {
            Vec::new()
        };
        let fallback = extra > 0 && others.is_empty();
        candidates.extend(others);
        let (chosen, evals) = select_candidate(&belief, candidates, sensor, Some(world), &params.noise)?;
        let d_opts: Vec<f64> = evals.iter().map(|e| e.d_opt).collect();
        let alt = d_opts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != chosen)
            .map(|(_, d)| *d)
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))));
        let e = evals.into_iter().nth(chosen).expect("chosen index is valid");
        belief = e.belief;
        current = goal;
        steps.push(RhemStep {
            step,
            config: current,
            gain: value,
            known_fraction: known,
            chosen,
            d_opt_chosen: e.d_opt,
            candidate_d_opts: d_opts,
            d_opt_best_alternative: alt,
            landmarks_visible: visible_landmarks(&belief, &current, sensor, Some(world)).len(),
            min_eigenvalue: e.min_eigenvalue,
            fallback,
            path: Some(e.path),
        });
    }
    Ok(RhemLog {
        steps,
        map,
        belief,
        stuck,
    })
}
