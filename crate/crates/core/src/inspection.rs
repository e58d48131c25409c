//! Types shared by the model-based inspection planners.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use crate::search::{plan_point_to_point, try_direct, FreeSpace, PlannedPath, SearchError, SearchParams};
use crate::tour::CostMatrix;
use crate::vehicle::{VehicleKind, VehicleModel};
use crate::sensor::SensorModel;
use crate::{Configuration, TriangleMesh};

/// A closed inspection tour over viewpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectionPath {
    /// Viewpoints in visiting order (the tour returns to the first one).
    pub viewpoints: Vec<Configuration>,
    /// One path per consecutive viewpoint pair, including the closing leg.
    pub legs: Vec<PlannedPath>,
    /// Total execution time, s.
    pub cost: f64,
    /// Faces seen from at least one viewpoint, ascending.
    pub covered: Vec<usize>,
}

impl InspectionPath {
    pub fn single(viewpoint: Configuration, covered: Vec<usize>) -> Self {
        Self {
            viewpoints: vec![viewpoint],
            legs: Vec::new(),
            cost: 0.0,
            covered,
        }
    }

    /// Sum of the leg costs recomputed from the legs themselves.
    pub fn recomputed_cost(&self) -> f64 {
        self.legs
            .iter()
            .flat_map(|l| l.legs.iter())
            .map(|l| l.cost)
            .sum()
    }

    /// Dense `(t, configuration)` samples along the whole tour.
    pub fn timed_samples(&self) -> Vec<(f64, Configuration)> {
        let mut out = Vec::new();
        let mut t = 0.0;
        if let Some(first) = self.viewpoints.first() {
            out.push((0.0, *first));
        }
        for leg in self.legs.iter().flat_map(|p| p.legs.iter()) {
            let n = leg.waypoints.len();
            for (k, w) in leg.waypoints.iter().enumerate().skip(1) {
                out.push((t + leg.cost * k as f64 / (n - 1) as f64, *w));
            }
            t += leg.cost;
        }
        out
    }

    /// CSV with header `t_est_s,x_m,y_m,z_m,yaw_rad`, 6 decimals.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_path_csv(w, &self.timed_samples())
    }
}

pub fn write_path_csv<W: Write>(mut w: W, samples: &[(f64, Configuration)]) -> io::Result<()> {
    writeln!(w, "t_est_s,x_m,y_m,z_m,yaw_rad")?;
    for (t, c) in samples {
        let p = c.position;
        writeln!(w, "{:.6},{:.6},{:.6},{:.6},{:.6}", t, p.x, p.y, p.z, c.yaw())?;
    }
    Ok(())
}

/// Union of the visible sets of `viewpoints`, ascending.
pub fn coverage(sensor: &SensorModel, mesh: &TriangleMesh, viewpoints: &[Configuration]) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for v in viewpoints {
        set.extend(sensor.visible_set(v, mesh));
    }
    set.into_iter().collect()
}

const NO_HOP: usize = usize::MAX;

/// All-pairs connection costs between viewpoints.
///
/// Edges are direct local paths when collision-free; with relaying enabled,
/// blocked pairs are routed through other viewpoints (shortest chains of
/// direct edges) and, when the direct-edge graph is disconnected, through
/// RRT* bridges.
#[derive(Debug, Clone)]
pub struct Connections {
    n: usize,
    nodes: Vec<Configuration>,
    cost: Vec<f64>,
    next: Vec<usize>,
    bridges: BTreeMap<(usize, usize), PlannedPath>,
    edge_cost: Vec<f64>,
}

impl Connections {
    /// Direct edges only.
    pub fn direct<S: FreeSpace>(vehicle: &VehicleModel, space: &S, nodes: &[Configuration]) -> Self {
        let n = nodes.len();
        let mut edge_cost = vec![f64::INFINITY; n * n];
        for i in 0..n {
            edge_cost[i * n + i] = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                if vehicle.kind == VehicleKind::Holonomic && j < i {
                    edge_cost[i * n + j] = edge_cost[j * n + i];
                    continue;
                }
                if let Some(p) = try_direct(vehicle, space, &nodes[i], &nodes[j]) {
                    edge_cost[i * n + j] = p.cost;
                }
            }
        }
        let next = (0..n * n)
            .map(|k| if edge_cost[k].is_finite() { k % n } else { NO_HOP })
            .collect();
        Self {
            n,
            nodes: nodes.to_vec(),
            cost: edge_cost.clone(),
            next,
            bridges: BTreeMap::new(),
            edge_cost,
        }
    }

    /// Direct edges closed under relaying, bridged by RRT* where needed.
    pub fn relayed<S: FreeSpace>(
        vehicle: &VehicleModel,
        space: &S,
        nodes: &[Configuration],
        search: &SearchParams,
        seed: u64,
    ) -> Result<Self, (usize, usize)> {
        let mut c = Self::direct(vehicle, space, nodes);
        c.close();
        let mut round = 0u64;
        while let Some((i, j)) = c.closest_disconnected() {
            let path = plan_point_to_point(vehicle, space, &nodes[i], &nodes[j], search, seed ^ (round << 32) ^ (i * c.n + j) as u64);
            round += 1;
            match path {
                Ok(p) if p.configurations.last() == Some(&nodes[j]) => {
                    c.edge_cost[i * c.n + j] = p.cost;
                    c.bridges.insert((i, j), p);
                }
                Ok(_) | Err(SearchError::NoPathWithinBudget) | Err(SearchError::StartInCollision) => {
                    return Err((i, j));
                }
            }
            c.reset_from_edges();
            c.close();
        }
        Ok(c)
    }

    fn reset_from_edges(&mut self) {
        self.cost = self.edge_cost.clone();
        let n = self.n;
        self.next = (0..n * n)
            .map(|k| if self.edge_cost[k].is_finite() { k % n } else { NO_HOP })
            .collect();
    }

    /// Floyd-Warshall closure over the edge graph.
    fn close(&mut self) {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let ik = self.cost[i * n + k];
                if !ik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let cand = ik + self.cost[k * n + j];
                    if cand < self.cost[i * n + j] {
                        self.cost[i * n + j] = cand;
                        self.next[i * n + j] = self.next[i * n + k];
                    }
                }
            }
        }
    }

    fn closest_disconnected(&self) -> Option<(usize, usize)> {
        let n = self.n;
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.cost[i * n + j].is_finite() {
                    let d = self.nodes[i].position.distance(self.nodes[j].position);
                    if best.is_none_or(|b| d < b.0) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        best.map(|b| (b.1, b.2))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    pub fn matrix(&self) -> CostMatrix {
        CostMatrix::from_fn(self.n, |i, j| self.cost(i, j)).expect("costs are valid")
    }

    /// Materializes the path `i -> j` (empty legs for `i == j`).
    pub fn path(&self, vehicle: &VehicleModel, i: usize, j: usize) -> Option<PlannedPath> {
        if i == j {
            return Some(PlannedPath {
                configurations: vec![self.nodes[i]],
                legs: Vec::new(),
                cost: 0.0,
            });
        }
        if !self.cost(i, j).is_finite() {
            return None;
        }
        let mut legs = Vec::new();
        let mut cur = i;
        while cur != j {
            let hop = self.next[cur * self.n + j];
            if hop == NO_HOP {
                return None;
            }
            match self.bridges.get(&(cur, hop)) {
                Some(b) => legs.extend(b.legs.iter().cloned()),
                None => legs.push(vehicle.connect(&self.nodes[cur], &self.nodes[hop])?),
            }
            cur = hop;
        }
        Some(PlannedPath::from_legs(legs))
    }
}
