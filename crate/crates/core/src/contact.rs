//! Routing among points of interest on a planar surface, either staying in
//! contact (around surface obstacles) or undocking and flying over them.

use nalgebra::Vector2;

use crate::graph::{dijkstra, trace};
use crate::tour::{solve_path_from, CostMatrix};
use crate::Vec3;

pub type Point2 = Vector2<f64>;

const GEOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTask {
    /// A point on the surface plane.
    pub origin: Vec3,
    /// Unit plane normal, pointing away from the surface.
    pub normal: Vec3,
    /// Points of interest in plane coordinates, m.
    pub pois: Vec<Point2>,
    /// Simple polygons in plane coordinates.
    pub obstacles: Vec<Vec<Point2>>,
    /// Stand-off distance while undocked, m.
    pub clearance: f64,
    pub contact_speed: f64,
    pub flight_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactMode {
    InContact,
    UndockRedock,
}

impl ContactMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ContactMode::InContact => "in_contact",
            ContactMode::UndockRedock => "undock_redock",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactLeg {
    pub from: usize,
    pub to: usize,
    pub mode: ContactMode,
    pub cost: f64,
    /// Surface polyline for in-contact legs; the straight chord otherwise.
    pub polyline: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactTour {
    pub order: Vec<usize>,
    pub legs: Vec<ContactLeg>,
    pub cost: f64,
}

impl SurfaceTask {
    /// Orthonormal in-plane axes `(u, v)` with `u x v = normal`.
    pub fn axes(&self) -> (Vec3, Vec3) {
        let n = self.normal.normalize();
        let up = if n.z.abs() < 0.9 { Vec3::unit_z() } else { Vec3::unit_x() };
        let u = up.cross(n).normalize();
        (u, n.cross(u))
    }

    pub fn to_world(&self, p: Point2) -> Vec3 {
        let (u, v) = self.axes();
        self.origin + u * p.x + v * p.y
    }

    /// Whether `p` lies strictly inside some obstacle.
    pub fn in_obstacle(&self, p: Point2) -> bool {
        self.obstacles.iter().any(|poly| strictly_inside(poly, p))
    }

    /// A straight surface segment that never enters an obstacle interior.
    pub fn segment_clear(&self, a: Point2, b: Point2) -> bool {
        let mut ts = vec![0.0, 1.0];
        for poly in &self.obstacles {
            for i in 0..poly.len() {
                let (c, d) = (poly[i], poly[(i + 1) % poly.len()]);
                ts.extend(segment_params(a, b, c, d));
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        ts.windows(2)
            .all(|w| !self.in_obstacle(a + (b - a) * (0.5 * (w[0] + w[1]))))
    }

    fn graph_nodes(&self) -> Vec<Point2> {
        let mut nodes = self.pois.clone();
        nodes.extend(self.obstacles.iter().flatten().copied());
        nodes
    }

    /// Shortest in-contact path between two POIs over the visibility graph.
    pub fn surface_path(&self, from: usize, to: usize) -> Option<(f64, Vec<Point2>)> {
        let nodes = self.graph_nodes();
        let adj = visibility_graph(self, &nodes);
        let (dist, pred) = dijkstra(&adj, from);
        let path = trace(&pred, from, to)?;
        Some((dist[to], path.into_iter().map(|i| nodes[i]).collect()))
    }

    /// Cost and mode of the cheaper way from POI `p` to POI `q`.
    pub fn leg_cost(&self, p: usize, q: usize) -> ContactLeg {
        let (a, b) = (self.pois[p], self.pois[q]);
        let fly = (2.0 * self.clearance + (b - a).norm()) / self.flight_speed;
        let contact = self.surface_path(p, q);
        self.pick(p, q, contact, fly)
    }

    fn pick(&self, p: usize, q: usize, contact: Option<(f64, Vec<Point2>)>, fly: f64) -> ContactLeg {
        match contact {
            Some((len, poly)) if len / self.contact_speed <= fly => ContactLeg {
                from: p,
                to: q,
                mode: ContactMode::InContact,
                cost: len / self.contact_speed,
                polyline: poly,
            },
            _ => ContactLeg {
                from: p,
                to: q,
                mode: ContactMode::UndockRedock,
                cost: fly,
                polyline: vec![self.pois[p], self.pois[q]],
            },
        }
    }

    /// All pairwise legs, computed with one shortest-path tree per POI.
    pub fn all_legs(&self) -> Vec<Vec<ContactLeg>> {
        let nodes = self.graph_nodes();
        let adj = visibility_graph(self, &nodes);
        let n = self.pois.len();
        (0..n)
            .map(|p| {
                let (dist, pred) = dijkstra(&adj, p);
                (0..n)
                    .map(|q| {
                        let contact = trace(&pred, p, q).map(|path| (dist[q], path.into_iter().map(|i| nodes[i]).collect()));
                        let fly = (2.0 * self.clearance + (self.pois[q] - self.pois[p]).norm()) / self.flight_speed;
                        self.pick(p, q, contact, fly)
                    })
                    .collect()
            })
            .collect()
    }

    /// 3D waypoints `(mode, point)` of a leg.
    pub fn leg_waypoints(&self, leg: &ContactLeg) -> Vec<(ContactMode, Vec3)> {
        match leg.mode {
            ContactMode::InContact => leg.polyline.iter().map(|p| (leg.mode, self.to_world(*p))).collect(),
            ContactMode::UndockRedock => {
                let (a, b) = (self.to_world(leg.polyline[0]), self.to_world(leg.polyline[1]));
                let off = self.normal.normalize() * self.clearance;
                vec![(leg.mode, a), (leg.mode, a + off), (leg.mode, b + off), (leg.mode, b)]
            }
        }
    }
}

/// Edges between every pair of mutually visible nodes.
pub fn visibility_graph(task: &SurfaceTask, nodes: &[Point2]) -> Vec<Vec<(usize, f64)>> {
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        if task.in_obstacle(nodes[i]) {
            continue;
        }
        for j in i + 1..n {
            if !task.in_obstacle(nodes[j]) && task.segment_clear(nodes[i], nodes[j]) {
                let d = (nodes[j] - nodes[i]).norm();
                adj[i].push((j, d));
                adj[j].push((i, d));
            }
        }
    }
    adj
}

fn cross2(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Parameters along `a -> b` where it meets segment `c -> d` (both ends of
/// the overlap for collinear segments).
fn segment_params(a: Point2, b: Point2, c: Point2, d: Point2) -> Vec<f64> {
    let r = b - a;
    let s = d - c;
    let denom = cross2(r, s);
    let scale = r.norm() * s.norm();
    let qp = c - a;
    if denom.abs() <= GEOM_EPS * scale.max(1.0) {
        if cross2(qp, r).abs() > GEOM_EPS * r.norm().max(1.0) || r.norm_squared() == 0.0 {
            return Vec::new();
        }
        let rr = r.norm_squared();
        return [qp.dot(&r) / rr, (d - a).dot(&r) / rr]
            .into_iter()
            .filter(|t| (0.0..=1.0).contains(t))
            .collect();
    }
    let t = cross2(qp, s) / denom;
    let u = cross2(qp, r) / denom;
    if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
        vec![t.clamp(0.0, 1.0)]
    } else {
        Vec::new()
    }
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let ab = b - a;
    let len = ab.norm();
    if cross2(ab, p - a).abs() > 1e-9 * len.max(1.0) {
        return false;
    }
    let t = (p - a).dot(&ab);
    t >= -1e-12 && t <= ab.norm_squared() + 1e-12
}

/// Even-odd point in polygon, `false` on the boundary.
pub fn strictly_inside(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if on_segment(p, a, b) {
            return false;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Open tour over all POIs starting at `start`.
pub fn plan_contact_tour(task: &SurfaceTask, start: usize, restarts: usize, seed: u64) -> ContactTour {
    let n = task.pois.len();
    if n <= 1 {
        return ContactTour {
            order: (0..n).collect(),
            legs: Vec::new(),
            cost: 0.0,
        };
    }
    let legs = task.all_legs();
    let m = CostMatrix::from_fn(n, |i, j| legs[i][j].cost).expect("leg costs are finite");
    let tour = solve_path_from(&m, start, restarts, seed).expect("undocking always connects");
    let chosen: Vec<ContactLeg> = tour.order.windows(2).map(|w| legs[w[0]][w[1]].clone()).collect();
    let cost = chosen.iter().map(|l| l.cost).sum();
    ContactTour {
        order: tour.order,
        legs: chosen,
        cost,
    }
}

/// CSV with header `leg,mode,x,y,z`.
pub fn write_contact_csv<W: std::io::Write>(mut w: W, task: &SurfaceTask, tour: &ContactTour) -> std::io::Result<()> {
    writeln!(w, "leg,mode,x,y,z")?;
    for (i, leg) in tour.legs.iter().enumerate() {
        for (mode, p) in task.leg_waypoints(leg) {
            writeln!(w, "{},{},{:.6},{:.6},{:.6}", i, mode.as_str(), p.x, p.y, p.z)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall(pois: Vec<Point2>, obstacles: Vec<Vec<Point2>>, flight: f64) -> SurfaceTask {
        SurfaceTask {
            origin: Vec3::zero(),
            normal: Vec3::unit_x(),
            pois,
            obstacles,
            clearance: 0.3,
            contact_speed: 0.1,
            flight_speed: flight,
        }
    }

    fn square(cx: f64, cy: f64, h: f64) -> Vec<Point2> {
        vec![
            Point2::new(cx - h, cy - h),
            Point2::new(cx + h, cy - h),
            Point2::new(cx + h, cy + h),
            Point2::new(cx - h, cy + h),
        ]
    }

    #[test]
    fn flying_wins_when_fast() {
        let t = wall(vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)], vec![], 0.5);
        let leg = t.leg_cost(0, 1);
        assert_eq!(leg.mode, ContactMode::UndockRedock);
        assert!((leg.cost - 5.2).abs() < 1e-12);
    }

    #[test]
    fn contact_wins_when_flight_is_slow() {
        let t = wall(vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)], vec![], 0.05);
        let leg = t.leg_cost(0, 1);
        assert_eq!(leg.mode, ContactMode::InContact);
        assert!((leg.cost - 20.0).abs() < 1e-12);
    }

    #[test]
    fn detours_around_a_square() {
        let t = wall(vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)], vec![square(1.0, 0.0, 0.25)], 0.001);
        let (len, path) = t.surface_path(0, 1).unwrap();
        let expect = 2.0 * (0.75f64.powi(2) + 0.25f64.powi(2)).sqrt() + 0.5;
        assert!((len - expect).abs() < 1e-9, "{len} vs {expect}");
        for w in path.windows(2) {
            assert!(t.segment_clear(w[0], w[1]));
        }
    }

    #[test]
    fn crossing_a_square_is_rejected_but_grazing_is_not() {
        let t = wall(vec![], vec![square(0.0, 0.0, 1.0)], 1.0);
        assert!(!t.segment_clear(Point2::new(-2.0, 0.0), Point2::new(2.0, 0.0)));
        assert!(t.segment_clear(Point2::new(-2.0, 1.0), Point2::new(2.0, 1.0)));
        assert!(t.segment_clear(Point2::new(-1.0, -1.0), Point2::new(-2.0, 2.0)));
        assert!(!t.segment_clear(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)));
    }

    #[test]
    fn single_poi_and_collinear_sweep() {
        let one = wall(vec![Point2::new(0.0, 0.0)], vec![], 0.05);
        let t1 = plan_contact_tour(&one, 0, 3, 0);
        assert!(t1.legs.is_empty());
        assert_eq!(t1.cost, 0.0);
        let line = wall((0..4).map(|i| Point2::new(i as f64 * 0.5, 0.0)).collect(), vec![], 0.01);
        let t = plan_contact_tour(&line, 0, 3, 0);
        assert_eq!(t.order, vec![0, 1, 2, 3]);
        assert!(t.legs.iter().all(|l| l.mode == ContactMode::InContact));
        assert!((t.cost - t.legs.iter().map(|l| l.cost).sum::<f64>()).abs() < 1e-9);
    }
}
