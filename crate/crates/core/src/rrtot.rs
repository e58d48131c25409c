//! Coverage tour search over a forest of RRT* trees whose roots are copies
//! of vertices of earlier trees.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{dijkstra, trace};
use crate::inspection::InspectionPath;
use crate::search::{FreeSpace, MeshSpace, PlannedPath, SearchTree};
use crate::sensor::SensorModel;
use crate::sip::structure_coverage;
use crate::tour::{solve_tour, CostMatrix};
use crate::vehicle::{LocalPath, VehicleKind, VehicleModel};
use crate::{Aabb, Configuration, TriangleMesh, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RrtotError {
    #[error("start configuration is in collision")]
    StartInCollision,
    #[error("no covering tour within the budget; faces never seen: {uncovered:?}")]
    NoCoverageWithinBudget { uncovered: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrtotParams {
    pub iterations: usize,
    /// Iterations between tour extractions.
    pub checkpoint: usize,
    /// Probability of spawning a new tree per iteration.
    pub p_new: f64,
    pub step: f64,
    /// Sampling region margin around the world bounds, m.
    pub margin: f64,
    pub tour_restarts: usize,
    /// Randomized set-cover attempts per extraction.
    pub cover_trials: usize,
}

impl Default for RrtotParams {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            checkpoint: 1000,
            p_new: 0.1,
            step: 1.0,
            margin: 1.5,
            tour_restarts: 3,
            cover_trials: 12,
        }
    }
}

/// Structure, world and robot models shared by forest growth and extraction.
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    /// Structure faces first, followed by any obstacle faces.
    pub world: &'a TriangleMesh,
    pub structure_faces: usize,
    pub sensor: &'a SensorModel,
    pub vehicle: &'a VehicleModel,
}

impl Scene<'_> {
    fn space(&self) -> MeshSpace<'_> {
        MeshSpace::new(self.world, self.vehicle.clearance)
    }

    pub fn coverage_of(&self, c: &Configuration) -> FixedBitSet {
        let mut bits = FixedBitSet::with_capacity(self.structure_faces);
        for f in self.sensor.visible_set(c, self.world) {
            if f < self.structure_faces {
                bits.insert(f);
            }
        }
        bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub tree: usize,
    pub node: usize,
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub trees: Vec<SearchTree>,
    /// Faces seen from each vertex, per tree.
    pub coverage: Vec<Vec<FixedBitSet>>,
    /// The vertex each tree's root was copied from (`None` for the first tree).
    pub origins: Vec<Option<VertexId>>,
    pub bounds: Aabb,
}

impl Forest {
    pub fn new(scene: &Scene, start: Configuration, bounds: Aabb) -> Self {
        Self {
            trees: vec![SearchTree::new(start, bounds)],
            coverage: vec![vec![scene.coverage_of(&start)]],
            origins: vec![None],
            bounds,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.trees.iter().map(|t| t.len()).sum()
    }

    pub fn config(&self, v: VertexId) -> Configuration {
        self.trees[v.tree].nodes[v.node].config
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.trees
            .iter()
            .enumerate()
            .flat_map(|(t, tree)| (0..tree.len()).map(move |n| VertexId { tree: t, node: n }))
    }

    /// Faces seen from at least one vertex.
    pub fn covered(&self) -> FixedBitSet {
        let mut all = FixedBitSet::with_capacity(self.coverage[0][0].len());
        for c in self.coverage.iter().flatten() {
            all.union_with(c);
        }
        all
    }

    fn pick_vertex<R: Rng>(&self, rng: &mut R) -> VertexId {
        let mut k = rng.gen_range(0..self.vertex_count());
        for (t, tree) in self.trees.iter().enumerate() {
            if k < tree.len() {
                return VertexId { tree: t, node: k };
            }
            k -= tree.len();
        }
        unreachable!("index within vertex count")
    }

    /// Runs `iterations` growth steps; returns the number of vertices added.
    pub fn grow<R: Rng>(&mut self, scene: &Scene, params: &RrtotParams, iterations: usize, rng: &mut R) -> usize {
        let space = scene.space();
        let b = self.bounds;
        let mut added = 0;
        for _ in 0..iterations {
            if rng.gen::<f64>() < params.p_new {
                let v = self.pick_vertex(rng);
                let c = self.config(v);
                let cov = self.coverage[v.tree][v.node].clone();
                self.trees.push(SearchTree::new(c, b));
                self.coverage.push(vec![cov]);
                self.origins.push(Some(v));
                added += 1;
            } else {
                let t = rng.gen_range(0..self.trees.len());
                let p = Vec3::new(
                    rng.gen_range(b.min.x..=b.max.x),
                    rng.gen_range(b.min.y..=b.max.y),
                    rng.gen_range(b.min.z..=b.max.z),
                );
                let sample = Configuration::new(p, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
                if let Some(idx) = self.trees[t].extend(sample, scene.vehicle, &space, params.step) {
                    debug_assert_eq!(idx, self.coverage[t].len());
                    let cov = scene.coverage_of(&self.trees[t].nodes[idx].config);
                    self.coverage[t].push(cov);
                    added += 1;
                }
            }
        }
        added
    }
}

/// Directed traversal graph over all forest vertices: tree edges in both
/// directions plus zero-cost links between each spawned root and its origin.
struct ForestGraph {
    ids: Vec<VertexId>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl ForestGraph {
    fn build(forest: &Forest, scene: &Scene) -> Self {
        let space = scene.space();
        let mut offsets = Vec::with_capacity(forest.trees.len());
        let mut ids = Vec::new();
        for (t, tree) in forest.trees.iter().enumerate() {
            offsets.push(ids.len());
            ids.extend((0..tree.len()).map(|n| VertexId { tree: t, node: n }));
        }
        let mut adj = vec![Vec::new(); ids.len()];
        for (t, tree) in forest.trees.iter().enumerate() {
            for (n, node) in tree.nodes.iter().enumerate() {
                let Some(p) = node.parent else { continue };
                let (u, v) = (offsets[t] + p, offsets[t] + n);
                adj[u].push((v, node.edge_cost));
                let back = match scene.vehicle.kind {
                    VehicleKind::Holonomic => Some(node.edge_cost),
                    VehicleKind::Nonholonomic => scene
                        .vehicle
                        .connect(&node.config, &tree.nodes[p].config)
                        .filter(|l| space.path_free(l))
                        .map(|l| l.cost),
                };
                if let Some(c) = back {
                    adj[v].push((u, c));
                }
            }
            if let Some(o) = forest.origins[t] {
                let (r, s) = (offsets[t], offsets[o.tree] + o.node);
                adj[r].push((s, 0.0));
                adj[s].push((r, 0.0));
            }
        }
        Self { ids, adj }
    }
}

/// Greedy set cover over vertex coverage. `beta = None` maximizes new faces
/// only; otherwise new faces are discounted by `beta + distance from start`.
/// With `rng`, picks uniformly among the three best-scoring vertices.
fn greedy_cover<R: Rng>(
    cover: &[&FixedBitSet],
    d_start: &[f64],
    faces: usize,
    beta: Option<f64>,
    mut rng: Option<&mut R>,
) -> Option<Vec<usize>> {
    let mut have = cover[0].clone();
    let mut chosen = vec![0];
    while have.count_ones(..) < faces {
        let mut scored: Vec<(f64, usize)> = Vec::new();
        for (i, c) in cover.iter().enumerate() {
            if !d_start[i].is_finite() {
                continue;
            }
            let gain = c.difference(&have).count();
            if gain == 0 {
                continue;
            }
            let s = match beta {
                None => gain as f64 - 1e-9 * d_start[i],
                Some(b) => gain as f64 / (b + d_start[i]),
            };
            scored.push((s, i));
        }
        if scored.is_empty() {
            return None;
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let pick = match rng.as_mut() {
            Some(r) => scored[r.gen_range(0..scored.len().min(3))].1,
            None => scored[0].1,
        };
        have.union_with(cover[pick]);
        chosen.push(pick);
    }
    // drop members whose faces the others already see
    let mut k = chosen.len();
    while k > 1 {
        k -= 1;
        let mut rest = FixedBitSet::with_capacity(faces);
        for (j, &m) in chosen.iter().enumerate() {
            if j != k {
                rest.union_with(cover[m]);
            }
        }
        if rest.count_ones(..) == faces {
            chosen.remove(k);
        }
    }
    Some(chosen)
}

/// Cheapest closed covering walk through the forest found by set cover
/// variants and tour ordering; `None` when the forest cannot cover every face.
///
/// Each leg of the walk is shortcut where a cheaper direct connection is
/// collision-free, so legs may leave the forest edges.
pub fn extract_best_tour<R: Rng>(forest: &Forest, scene: &Scene, params: &RrtotParams, rng: &mut R) -> Option<InspectionPath> {
    let faces = scene.structure_faces;
    if forest.covered().count_ones(..) < faces {
        return None;
    }
    let graph = ForestGraph::build(forest, scene);
    let cover: Vec<&FixedBitSet> = graph.ids.iter().map(|v| &forest.coverage[v.tree][v.node]).collect();
    let mut paths: HashMap<usize, (Vec<f64>, Vec<Option<usize>>)> = HashMap::new();
    paths.insert(0, dijkstra(&graph.adj, 0));
    let d_start = paths[&0].0.clone();

    let mut sets: Vec<Vec<usize>> = Vec::new();
    for beta in [None, Some(0.25), Some(1.0), Some(4.0)] {
        sets.extend(greedy_cover::<ChaCha8Rng>(&cover, &d_start, faces, beta, None));
    }
    let mut trial_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    for k in 0..params.cover_trials {
        let beta = [Some(0.25), Some(1.0), Some(4.0)][k % 3];
        sets.extend(greedy_cover(&cover, &d_start, faces, beta, Some(&mut trial_rng)));
    }
    sets.iter_mut().for_each(|s| s.sort_unstable());
    sets.sort();
    sets.dedup();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for set in &sets {
        for &m in set {
            paths.entry(m).or_insert_with(|| dijkstra(&graph.adj, m));
        }
        let n = set.len();
        let Ok(m) = CostMatrix::from_fn(n, |i, j| paths[&set[i]].0[set[j]]) else {
            continue;
        };
        let Ok(tour) = solve_tour(&m, true, params.tour_restarts, rng.gen()) else {
            continue;
        };
        if !tour.cost.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| tour.cost < b.0) {
            best = Some((tour.cost, tour.order.iter().map(|&i| set[i]).collect()));
        }
    }
    let (_, order) = best?;
    let viewpoints: Vec<Configuration> = order.iter().map(|&i| forest.config(graph.ids[i])).collect();
    let mut legs = Vec::new();
    if order.len() > 1 {
        for k in 0..order.len() {
            let (a, b) = (order[k], order[(k + 1) % order.len()]);
            let nodes = trace(&paths[&a].1, a, b)?;
            let mut configs: Vec<Configuration> = nodes.iter().map(|&i| forest.config(graph.ids[i])).collect();
            configs.dedup();
            let local = shortcut(scene, &configs)?;
            legs.push(if local.is_empty() {
                PlannedPath {
                    configurations: vec![forest.config(graph.ids[a])],
                    legs: Vec::new(),
                    cost: 0.0,
                }
            } else {
                PlannedPath::from_legs(local)
            });
        }
    }
    let cost = legs.iter().map(|l| l.cost).sum();
    let covered = structure_coverage(scene.sensor, scene.world, faces, &viewpoints);
    Some(InspectionPath {
        viewpoints,
        legs,
        cost,
        covered,
    })
}

/// Legs along `configs`, skipping ahead to the farthest configuration that
/// can be reached directly at lower cost.
fn shortcut(scene: &Scene, configs: &[Configuration]) -> Option<Vec<LocalPath>> {
    let space = scene.space();
    let vehicle = scene.vehicle;
    let mut legs = Vec::new();
    let mut i = 0;
    while i + 1 < configs.len() {
        let mut next = i + 1;
        let mut leg = vehicle.connect(&configs[i], &configs[i + 1])?;
        for j in (i + 2..configs.len()).rev() {
            let along: f64 = configs[i..=j]
                .windows(2)
                .map(|w| vehicle.connect_cost(&w[0], &w[1]).unwrap_or(f64::INFINITY))
                .sum();
            let Some(direct) = vehicle.connect(&configs[i], &configs[j]) else {
                continue;
            };
            if direct.cost <= along && space.path_free(&direct) {
                next = j;
                leg = direct;
                break;
            }
        }
        legs.push(leg);
        i = next;
    }
    Some(legs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrtotResult {
    pub path: InspectionPath,
    /// `(iteration, best cost)` at each checkpoint once a tour exists.
    pub history: Vec<(usize, f64)>,
    pub vertices: usize,
}

/// Grows the forest and extracts the best tour every checkpoint.
pub fn plan_optimal_inspection(
    mesh: &TriangleMesh,
    sensor: &SensorModel,
    vehicle: &VehicleModel,
    obstacles: Option<&TriangleMesh>,
    start: Configuration,
    params: &RrtotParams,
    seed: u64,
) -> Result<RrtotResult, RrtotError> {
    let world = match obstacles {
        Some(o) => mesh.merged(o),
        None => mesh.clone(),
    };
    let scene = Scene {
        world: &world,
        structure_faces: mesh.len(),
        sensor,
        vehicle,
    };
    if !scene.space().point_free(start.position) {
        return Err(RrtotError::StartInCollision);
    }
    let mut bounds = *world.bounds();
    bounds.grow(start.position);
    let bounds = bounds.inflate(params.margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forest = Forest::new(&scene, start, bounds);
    let mut best: Option<InspectionPath> = None;
    let mut history = Vec::new();
    let period = params.checkpoint.max(1);
    let mut done = 0;
    while done < params.iterations {
        let n = period.min(params.iterations - done);
        forest.grow(&scene, params, n, &mut rng);
        done += n;
        if let Some(p) = extract_best_tour(&forest, &scene, params, &mut rng) {
            if best.as_ref().is_none_or(|b| p.cost < b.cost) {
                best = Some(p);
            }
        }
        if let Some(b) = &best {
            history.push((done, b.cost));
        }
    }
    match best {
        Some(path) => Ok(RrtotResult {
            path,
            history,
            vertices: forest.vertex_count(),
        }),
        None => {
            let seen = forest.covered();
            Err(RrtotError::NoCoverageWithinBudget {
                uncovered: (0..mesh.len()).filter(|&f| !seen.contains(f)).collect(),
            })
        }
    }
}
