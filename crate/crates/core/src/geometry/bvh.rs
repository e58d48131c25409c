//! Median-split bounding-volume hierarchy over mesh faces.

use super::aabb::Aabb;
use super::mesh::{better_hit, intersect_face, Ray, Triangle};
use super::scalar::Real;
use super::vec3::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf { bounds: Aabb<T>, start: usize, count: usize },
    Inner { bounds: Aabb<T>, left: usize, right: usize },
}

impl<T: Real> Node<T> {
    fn bounds(&self) -> &Aabb<T> {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<usize>,
}

impl<T: Real> Bvh<T> {
    pub fn build(tris: &[Triangle<T>]) -> Self {
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        if !tris.is_empty() {
            build_node(tris, &mut order, 0, tris.len(), &mut nodes);
        }
        Self { nodes, order }
    }

    /// Inflation that keeps box tests conservative under rounding.
    fn slack(bounds: &Aabb<T>) -> T {
        let e = bounds.extent();
        (e.x.abs() + e.y.abs() + e.z.abs() + T::one()) * T::lit(1e-9)
    }

    pub fn nearest_hit(&self, tris: &[Triangle<T>], ray: &Ray<T>) -> Option<(T, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(T, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let b = node.bounds();
            let limit = best.map_or(ray.max_range, |(t, _)| t);
            let Some(entry) =
                b.inflate(Self::slack(b))
                    .clip_line(ray.origin, ray.direction(), T::zero(), limit)
            else {
                continue;
            };
            // equal `t` still matters for the lowest-index tie-break
            if let Some((bt, _)) = best {
                if entry > bt {
                    continue;
                }
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    for &f in &self.order[start..start + count] {
                        if let Some(t) = intersect_face(ray, &tris[f]) {
                            if better_hit(t, f, best) {
                                best = Some((t, f));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }

    pub fn any_hit(&self, tris: &[Triangle<T>], ray: &Ray<T>) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let b = node.bounds();
            if b.inflate(Self::slack(b))
                .clip_line(ray.origin, ray.direction(), T::zero(), ray.max_range)
                .is_none()
            {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    if self.order[start..start + count]
                        .iter()
                        .any(|&f| intersect_face(ray, &tris[f]).is_some())
                    {
                        return true;
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        false
    }

    /// Visits faces whose boxes lie within `radius` of segment `ab` until
    /// `test` accepts one.
    pub fn any_near_segment<F>(
        &self,
        tris: &[Triangle<T>],
        a: Vec3<T>,
        b: Vec3<T>,
        radius: T,
        mut test: F,
    ) -> bool
    where
        F: FnMut(&Triangle<T>) -> bool,
    {
        if self.nodes.is_empty() {
            return false;
        }
        let d = b - a;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let bx = node.bounds();
            let grown = bx.inflate(radius + Self::slack(bx));
            if grown.clip_line(a, d, T::zero(), T::one()).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    if self.order[start..start + count]
                        .iter()
                        .any(|&f| test(&tris[f]))
                    {
                        return true;
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        false
    }
}

fn build_node<T: Real>(
    tris: &[Triangle<T>],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let slice = &mut order[start..end];
    let bounds = slice
        .iter()
        .fold(Aabb::empty(), |b, &f| b.union(&tris[f].bounds()));
    let idx = nodes.len();
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            start,
            count: slice.len(),
        });
        return idx;
    }
    let centroid_bounds = Aabb::from_points(slice.iter().map(|&f| tris[f].centroid));
    let axis = centroid_bounds.longest_axis();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        let ca = tris[a].centroid.get(axis);
        let cb = tris[b].centroid.get(axis);
        ca.partial_cmp(&cb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    // placeholder, patched once both children exist
    nodes.push(Node::Leaf {
        bounds,
        start,
        count: 0,
    });
    let left = build_node(tris, order, start, start + mid, nodes);
    let right = build_node(tris, order, start + mid, end, nodes);
    nodes[idx] = Node::Inner {
        bounds,
        left,
        right,
    };
    idx
}
