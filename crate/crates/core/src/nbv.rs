//! Receding-horizon next-best-view exploration on an occupancy map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::occupancy::{MapError, MapParams, OccupancyMap, ScanRay, VoxelState};
use crate::search::{FreeSpace, MeshSpace};
use crate::sensor::SensorModel;
use crate::vehicle::{LocalPath, VehicleModel};
use crate::{Aabb, Configuration, TriangleMesh, Vec3};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("root configuration {0:?} is not in known free space")]
    RootNotFree(Vec3),
    #[error("start configuration is in collision")]
    StartInCollision,
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Free space as seen by the map: every voxel within the clearance box must
/// be classified `Free`. Unknown and occupied voxels are not traversable.
#[derive(Debug, Clone, Copy)]
pub struct MapSpace<'a> {
    pub map: &'a OccupancyMap,
    pub clearance: f64,
}

impl FreeSpace for MapSpace<'_> {
    fn point_free(&self, p: Vec3) -> bool {
        let shrink = 1e-9;
        let lo = self.map.raw_key(p - Vec3::splat(self.clearance - shrink));
        let hi = self.map.raw_key(p + Vec3::splat(self.clearance - shrink));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if self.map.state([x, y, z]) != VoxelState::Free {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn segment_free(&self, a: Vec3, b: Vec3) -> bool {
        let step = 0.5 * self.map.resolution();
        let n = (a.distance(b) / step).ceil().max(1.0) as usize;
        (0..=n).all(|i| self.point_free(a.lerp(b, i as f64 / n as f64)))
    }
}

/// Volume of unknown space the sensor would observe from `config`, m^3.
pub fn node_gain(map: &OccupancyMap, config: &Configuration, sensor: &SensorModel) -> f64 {
    map.count_unknown_visible(config, sensor) as f64 * map.voxel_volume()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewNode {
    pub config: Configuration,
    pub parent: Option<usize>,
    /// Edge execution time from the parent, s.
    pub edge_cost: f64,
    pub cost: f64,
    pub gain: f64,
    /// Discounted gain accumulated from the root.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewTree {
    pub nodes: Vec<ViewNode>,
    pub lambda: f64,
}

impl ViewTree {
    /// Node with the highest branch value (lowest index on ties).
    pub fn best_node(&self) -> usize {
        let mut best = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.value > self.nodes[best].value {
                best = i;
            }
        }
        best
    }

    /// Best-valued child of the root, used when the root itself scores highest.
    pub fn best_root_child(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.parent == Some(0) && best.is_none_or(|b| n.value > self.nodes[b].value) {
                best = Some(i);
            }
        }
        best
    }

    /// Child of the root on the branch ending at `node`.
    pub fn first_step(&self, node: usize) -> Option<usize> {
        let mut cur = node;
        loop {
            match self.nodes[cur].parent {
                None => return None,
                Some(0) => return Some(cur),
                Some(p) => cur = p,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub nodes: usize,
    /// Longest edge, m.
    pub max_edge: f64,
    /// Gain discount per second of travel.
    pub lambda: f64,
    /// Sample attempts per requested node before settling for fewer nodes.
    pub attempts_per_node: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            nodes: 60,
            max_edge: 1.0,
            lambda: 0.25,
            attempts_per_node: 20,
        }
    }
}

/// Grows an RRT of views through known free space and scores each node with
/// `value(n) = value(parent) + gain(n) * exp(-lambda * cost(n))`.
pub fn build_view_tree<R: Rng>(
    map: &OccupancyMap,
    vehicle: &VehicleModel,
    root: Configuration,
    params: &TreeParams,
    mut gain: impl FnMut(&Configuration) -> f64,
    rng: &mut R,
) -> Result<ViewTree, ExploreError> {
    let space = MapSpace {
        map,
        clearance: vehicle.clearance,
    };
    if !space.point_free(root.position) {
        return Err(ExploreError::RootNotFree(root.position));
    }
    let g = gain(&root);
    let mut nodes = vec![ViewNode {
        config: root,
        parent: None,
        edge_cost: 0.0,
        cost: 0.0,
        gain: g,
        value: g,
    }];
    let b = *map.bounds();
    let mut attempts = 0;
    while nodes.len() < params.nodes && attempts < params.nodes * params.attempts_per_node {
        attempts += 1;
        let p = Vec3::new(
            rng.gen_range(b.min.x..=b.max.x),
            rng.gen_range(b.min.y..=b.max.y),
            rng.gen_range(b.min.z..=b.max.z),
        );
        let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let near = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.config.position.distance(p).total_cmp(&b.1.config.position.distance(p)).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("root exists");
        let from = nodes[near].config.position;
        let d = p.distance(from);
        let target = if d > params.max_edge { from.lerp(p, params.max_edge / d) } else { p };
        let cfg = Configuration::new(target, yaw);
        if !space.point_free(target) {
            continue;
        }
        let Some(path) = vehicle.connect(&nodes[near].config, &cfg) else {
            continue;
        };
        if !space.path_free(&path) {
            continue;
        }
        let cost = nodes[near].cost + path.cost;
        let g = gain(&cfg);
        let value = nodes[near].value + g * (-params.lambda * cost).exp();
        nodes.push(ViewNode {
            config: cfg,
            parent: Some(near),
            edge_cost: path.cost,
            cost,
            gain: g,
            value,
        });
    }
    Ok(ViewTree {
        nodes,
        lambda: params.lambda,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreParams {
    pub tree: TreeParams,
    /// Stop once the best branch value falls below this, m^3.
    pub min_gain: f64,
    pub max_steps: usize,
    pub rays_h: usize,
    pub rays_v: usize,
    /// Region whose known fraction is reported; the map bounds by default.
    pub region: Option<Aabb>,
}

impl Default for ExploreParams {
    fn default() -> Self {
        Self {
            tree: TreeParams::default(),
            min_gain: 0.05,
            max_steps: 200,
            rays_h: 48,
            rays_v: 32,
            region: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreStep {
    pub step: usize,
    /// Configuration after executing the step.
    pub config: Configuration,
    /// Best branch value of the step's tree.
    pub gain: f64,
    /// Known fraction of the region after this step's scan.
    pub known_fraction: f64,
    /// Executed path.
    pub path: Option<LocalPath>,
}

#[derive(Debug, Clone)]
pub struct ExploreLog {
    pub steps: Vec<ExploreStep>,
    pub map: OccupancyMap,
    /// Set when exploration ended because no branch could be grown.
    pub stuck: bool,
}

impl ExploreLog {
    /// CSV with header `step,x,y,z,yaw,gain,known_fraction`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,x,y,z,yaw,gain,known_fraction")?;
        for s in &self.steps {
            let p = s.config.position;
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                s.step,
                p.x,
                p.y,
                p.z,
                s.config.yaw(),
                s.gain,
                s.known_fraction
            )?;
        }
        Ok(())
    }
}

/// Senses from `config` against the ground-truth world.
pub fn sense(map: &mut OccupancyMap, world: &TriangleMesh, config: &Configuration, sensor: &SensorModel, rays_h: usize, rays_v: usize) -> Result<(), MapError> {
    let dirs = sensor.scan_directions(config, rays_h, rays_v);
    let hits = sensor.simulate_scan(config, Some(world), rays_h, rays_v);
    let rays: Vec<ScanRay> = dirs
        .into_iter()
        .zip(hits)
        .map(|(direction, hit)| ScanRay { direction, hit })
        .collect();
    map.integrate_scan(config.position, &rays, sensor.d_max)?;
    Ok(())
}

/// Closed-loop exploration: scan, grow a view tree, execute only the first
/// edge of the best branch, repeat.
#[allow(clippy::too_many_arguments)]
pub fn explore(
    world: &TriangleMesh,
    start: Configuration,
    sensor: &SensorModel,
    vehicle: &VehicleModel,
    map_params: MapParams,
    params: &ExploreParams,
    seed: u64,
) -> Result<ExploreLog, ExploreError> {
    if !MeshSpace::new(world, vehicle.clearance).point_free(start.position) {
        return Err(ExploreError::StartInCollision);
    }
    let mut map = OccupancyMap::new(map_params)?;
    let region = params.region.unwrap_or(*map.bounds());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start;
    let mut steps = Vec::new();
    let mut stuck = false;
    for step in 0..params.max_steps {
        sense(&mut map, world, &current, sensor, params.rays_h, params.rays_v)?;
        let known = map.known_fraction(&region);
        let tree = build_view_tree(&map, vehicle, current, &params.tree, |c| node_gain(&map, c, sensor), &mut rng)?;
        let best = tree.best_node();
        let value = tree.nodes[best].value;
        if value < params.min_gain {
            steps.push(ExploreStep {
                step,
                config: current,
                gain: value,
                known_fraction: known,
                path: None,
            });
            break;
        }
        let Some(first) = tree.first_step(best).or_else(|| tree.best_root_child()) else {
            stuck = true;
            steps.push(ExploreStep {
                step,
                config: current,
                gain: value,
                known_fraction: known,
                path: None,
            });
            break;
        };
        let next = tree.nodes[first].config;
        let path = vehicle.connect(&current, &next);
        current = next;
        steps.push(ExploreStep {
            step,
            config: current,
            gain: value,
            known_fraction: known,
            path,
        });
    }
    Ok(ExploreLog { steps, map, stuck })
}
