//! Collision-free point-to-point planning with RRT*.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::angle_diff;
use crate::vehicle::{LocalPath, VehicleKind, VehicleModel};
use crate::{Aabb, Configuration, TriangleMesh, Vec3};

/// Collision queries a planner can issue against its world representation.
pub trait FreeSpace {
    fn point_free(&self, p: Vec3) -> bool;
    fn segment_free(&self, a: Vec3, b: Vec3) -> bool;

    /// Checks every leg of a local path.
    fn path_free(&self, path: &LocalPath) -> bool {
        if path.straight {
            return self.segment_free(path.start.position, path.end.position);
        }
        path.waypoints
            .windows(2)
            .all(|w| self.segment_free(w[0].position, w[1].position))
    }
}

/// Free space around a known mesh world at a fixed clearance.
#[derive(Debug, Clone, Copy)]
pub struct MeshSpace<'a> {
    pub world: Option<&'a TriangleMesh>,
    pub clearance: f64,
}

impl<'a> MeshSpace<'a> {
    pub fn new(world: &'a TriangleMesh, clearance: f64) -> Self {
        Self {
            world: Some(world),
            clearance,
        }
    }

    pub fn empty() -> Self {
        Self {
            world: None,
            clearance: 0.0,
        }
    }
}

impl FreeSpace for MeshSpace<'_> {
    fn point_free(&self, p: Vec3) -> bool {
        self.world
            .is_none_or(|m| !m.segment_collides(p, p, self.clearance))
    }

    fn segment_free(&self, a: Vec3, b: Vec3) -> bool {
        self.world
            .is_none_or(|m| !m.segment_collides(a, b, self.clearance))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("start configuration is in collision")]
    StartInCollision,
    #[error("no path found within the search budget")]
    NoPathWithinBudget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub max_iterations: usize,
    pub max_seconds: Option<f64>,
    pub goal_bias: f64,
    /// Steering limit, m.
    pub step: f64,
    pub goal_tolerance: f64,
    pub goal_yaw_tolerance: f64,
    /// Sampling region; defaults to the start/goal box grown by `margin`.
    pub bounds: Option<Aabb>,
    pub margin: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            max_seconds: None,
            goal_bias: 0.05,
            step: 1.0,
            goal_tolerance: 0.05,
            goal_yaw_tolerance: 0.1,
            bounds: None,
            margin: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub config: Configuration,
    pub parent: Option<usize>,
    /// Cost of the edge from the parent.
    pub edge_cost: f64,
    pub cost: f64,
    pub children: Vec<usize>,
}

/// RRT* tree with rewiring. Costs are directional (parent to child).
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<TreeNode>,
    pub bounds: Aabb,
    gamma: f64,
}

impl SearchTree {
    pub fn new(root: Configuration, bounds: Aabb) -> Self {
        let ball = 4.0 / 3.0 * std::f64::consts::PI;
        let vol = bounds.volume().max(1e-9);
        let gamma = 2.0 * (4.0f64 / 3.0).cbrt() * (vol / ball).cbrt();
        Self {
            nodes: vec![TreeNode {
                config: root,
                parent: None,
                edge_cost: 0.0,
                cost: 0.0,
                children: Vec::new(),
            }],
            bounds,
            gamma,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &Configuration {
        &self.nodes[0].config
    }

    /// Connection radius `gamma * (ln n / n)^(1/3)` capped at `cap`.
    pub fn near_radius(&self, cap: f64) -> f64 {
        let n = (self.nodes.len() + 1) as f64;
        (self.gamma * (n.ln() / n).cbrt()).min(cap)
    }

    pub fn nearest(&self, p: Vec3) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.config.position.distance(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Configurations from the root to `node`.
    pub fn branch(&self, node: usize) -> Vec<Configuration> {
        let mut out = Vec::new();
        let mut cur = Some(node);
        while let Some(i) = cur {
            out.push(self.nodes[i].config);
            cur = self.nodes[i].parent;
        }
        out.reverse();
        out
    }

    pub fn branch_indices(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = Some(node);
        while let Some(i) = cur {
            out.push(i);
            cur = self.nodes[i].parent;
        }
        out.reverse();
        out
    }

    fn add_node(&mut self, config: Configuration, parent: usize, edge_cost: f64) -> usize {
        let idx = self.nodes.len();
        let cost = self.nodes[parent].cost + edge_cost;
        self.nodes.push(TreeNode {
            config,
            parent: Some(parent),
            edge_cost,
            cost,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(idx);
        idx
    }

    fn reparent(&mut self, node: usize, parent: usize, edge_cost: f64) {
        if let Some(old) = self.nodes[node].parent {
            self.nodes[old].children.retain(|&c| c != node);
        }
        self.nodes[node].parent = Some(parent);
        self.nodes[node].edge_cost = edge_cost;
        self.nodes[parent].children.push(node);
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            let p = self.nodes[i].parent.expect("non-root");
            self.nodes[i].cost = self.nodes[p].cost + self.nodes[i].edge_cost;
            stack.extend(self.nodes[i].children.iter().copied());
        }
    }

    /// Steers from the nearest node towards `sample` and inserts the result
    /// with RRT* parent selection and rewiring. Returns the new node index.
    pub fn extend<S: FreeSpace>(
        &mut self,
        sample: Configuration,
        vehicle: &VehicleModel,
        space: &S,
        step: f64,
    ) -> Option<usize> {
        let nearest = self.nearest(sample.position);
        let from = self.nodes[nearest].config.position;
        let delta = sample.position - from;
        let dist = delta.norm();
        let new = if dist > step {
            Configuration::new(from + delta * (step / dist), sample.yaw())
        } else {
            sample
        };
        if !space.point_free(new.position) {
            return None;
        }
        let radius = self.near_radius(step);
        let mut near: Vec<usize> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| *i == nearest || n.config.position.distance(new.position) <= radius)
            .map(|(i, _)| i)
            .collect();
        // parent choice: cheapest first, collision-checked lazily
        let mut options: Vec<(f64, usize, f64)> = near
            .iter()
            .filter_map(|&i| {
                let c = vehicle.connect_cost(&self.nodes[i].config, &new)?;
                Some((self.nodes[i].cost + c, i, c))
            })
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut chosen = None;
        for (_, i, c) in options {
            let Some(path) = vehicle.connect(&self.nodes[i].config, &new) else {
                continue;
            };
            if space.path_free(&path) {
                chosen = Some((i, c));
                break;
            }
        }
        let (parent, edge) = chosen?;
        let idx = self.add_node(new, parent, edge);
        near.retain(|&i| i != parent);
        for i in near {
            let Some(c) = vehicle.connect_cost(&new, &self.nodes[i].config) else {
                continue;
            };
            let cand = self.nodes[idx].cost + c;
            if cand < self.nodes[i].cost - 1e-12 && !self.is_ancestor(i, idx) {
                let Some(path) = vehicle.connect(&new, &self.nodes[i].config) else {
                    continue;
                };
                if space.path_free(&path) {
                    self.reparent(i, idx, c);
                }
            }
        }
        Some(idx)
    }

    fn is_ancestor(&self, a: usize, mut b: usize) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.nodes[b].parent {
                Some(p) => b = p,
                None => return false,
            }
        }
    }
}

/// A planned multi-leg path.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub configurations: Vec<Configuration>,
    pub legs: Vec<LocalPath>,
    pub cost: f64,
}

impl PlannedPath {
    pub fn from_legs(legs: Vec<LocalPath>) -> Self {
        let mut configurations = Vec::with_capacity(legs.len() + 1);
        if let Some(first) = legs.first() {
            configurations.push(first.start);
        }
        configurations.extend(legs.iter().map(|l| l.end));
        let cost = legs.iter().map(|l| l.cost).sum();
        Self {
            configurations,
            legs,
            cost,
        }
    }
}

/// `connect(a, b)` when that path is collision-free.
pub fn try_direct<S: FreeSpace>(
    vehicle: &VehicleModel,
    space: &S,
    a: &Configuration,
    b: &Configuration,
) -> Option<LocalPath> {
    let path = vehicle.connect(a, b)?;
    space.path_free(&path).then_some(path)
}

fn within_goal(params: &SearchParams, c: &Configuration, goal: &Configuration) -> bool {
    c.position.distance(goal.position) <= params.goal_tolerance
        && angle_diff(c.yaw(), goal.yaw()).abs() <= params.goal_yaw_tolerance
}

/// The direct connection when it is collision-free (it is then optimal),
/// otherwise [`rrt_star`].
pub fn plan_point_to_point<S: FreeSpace>(
    vehicle: &VehicleModel,
    space: &S,
    start: &Configuration,
    goal: &Configuration,
    params: &SearchParams,
    seed: u64,
) -> Result<PlannedPath, SearchError> {
    if space.point_free(start.position) {
        if let Some(direct) = try_direct(vehicle, space, start, goal) {
            return Ok(PlannedPath::from_legs(vec![direct]));
        }
    }
    rrt_star(vehicle, space, start, goal, params, seed)
}

/// RRT* from `start` to `goal`. Deterministic for a given seed when only the
/// iteration budget is binding.
pub fn rrt_star<S: FreeSpace>(
    vehicle: &VehicleModel,
    space: &S,
    start: &Configuration,
    goal: &Configuration,
    params: &SearchParams,
    seed: u64,
) -> Result<PlannedPath, SearchError> {
    if !space.point_free(start.position) {
        return Err(SearchError::StartInCollision);
    }
    if !space.point_free(goal.position) {
        return Err(SearchError::NoPathWithinBudget);
    }
    let bounds = params.bounds.unwrap_or_else(|| {
        Aabb::from_points([start.position, goal.position]).inflate(params.margin)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = SearchTree::new(*start, bounds);
    let mut goal_nodes = Vec::new();
    if within_goal(params, start, goal) {
        goal_nodes.push(0);
    }
    let clock = Instant::now();
    for _ in 0..params.max_iterations {
        if let Some(limit) = params.max_seconds {
            if clock.elapsed().as_secs_f64() > limit {
                break;
            }
        }
        let sample = if rng.gen::<f64>() < params.goal_bias {
            *goal
        } else {
            let p = Vec3::new(
                rng.gen_range(bounds.min.x..=bounds.max.x),
                rng.gen_range(bounds.min.y..=bounds.max.y),
                rng.gen_range(bounds.min.z..=bounds.max.z),
            );
            let yaw = match vehicle.kind {
                // intermediate headings are free for a holonomic vehicle
                VehicleKind::Holonomic => goal.yaw(),
                VehicleKind::Nonholonomic => rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            };
            Configuration::new(p, yaw)
        };
        if let Some(idx) = tree.extend(sample, vehicle, space, params.step) {
            if within_goal(params, &tree.nodes[idx].config, goal) {
                goal_nodes.push(idx);
            }
        }
    }
    // ranked by total cost including the closing leg to the exact goal
    let (best, closing) = goal_nodes
        .iter()
        .map(|&i| {
            let node = &tree.nodes[i];
            let closing = if node.config == *goal { None } else { try_direct(vehicle, space, &node.config, goal) };
            (i, node.cost + closing.as_ref().map_or(0.0, |l| l.cost), closing.is_some())
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _, closing)| (i, closing))
        .ok_or(SearchError::NoPathWithinBudget)?;
    let mut configs = tree.branch(best);
    if closing {
        configs.push(*goal);
    }
    let legs = configs
        .windows(2)
        .map(|w| vehicle.connect(&w[0], &w[1]).expect("tree edges are feasible"))
        .collect::<Vec<_>>();
    if legs.is_empty() {
        return Ok(PlannedPath {
            configurations: configs,
            legs,
            cost: 0.0,
        });
    }
    Ok(PlannedPath::from_legs(legs))
}
