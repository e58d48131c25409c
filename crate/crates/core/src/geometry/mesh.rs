use thiserror::Error;

use super::aabb::Aabb;
use super::bvh::Bvh;
use super::primitives::{ray_triangle, segment_triangle_distance, RAY_EPSILON};
use super::scalar::Real;
use super::vec3::Vec3;

/// Tolerance added to the clearance by [`TriangleMesh::segment_collides`].
pub const CLEARANCE_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh file not found: {0}")]
    FileNotFound(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("mesh has no valid (non-degenerate) faces")]
    EmptyMesh,
}

/// A non-degenerate triangle with cached normal, centroid and area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle<T> {
    pub vertices: [Vec3<T>; 3],
    pub normal: Vec3<T>,
    pub centroid: Vec3<T>,
    pub area: T,
}

impl<T: Real> Triangle<T> {
    /// Builds a triangle, or `None` when it has (numerically) zero area.
    pub fn new(v0: Vec3<T>, v1: Vec3<T>, v2: Vec3<T>) -> Option<Self> {
        if !(v0.is_finite() && v1.is_finite() && v2.is_finite()) {
            return None;
        }
        let cross = (v1 - v0).cross(v2 - v0);
        let twice_area = cross.norm();
        let longest = (v1 - v0)
            .norm_squared()
            .max((v2 - v1).norm_squared())
            .max((v0 - v2).norm_squared());
        if !(twice_area > T::epsilon() * T::lit(16.0) * longest) {
            return None;
        }
        Some(Self {
            vertices: [v0, v1, v2],
            normal: cross / twice_area,
            centroid: (v0 + v1 + v2) / T::lit(3.0),
            area: twice_area * T::lit(0.5),
        })
    }

    pub fn bounds(&self) -> Aabb<T> {
        Aabb::from_points(self.vertices)
    }

    pub fn flipped(&self) -> Self {
        let [a, b, c] = self.vertices;
        Self::new(a, c, b).expect("flipping keeps the area")
    }
}

/// Ray with unit direction and optional maximum range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    dir: Vec3<T>,
    pub max_range: T,
}

impl<T: Real> Ray<T> {
    /// Normalizes `dir`; returns `None` for a zero direction.
    pub fn new(origin: Vec3<T>, dir: Vec3<T>, max_range: Option<T>) -> Option<Self> {
        let dir = dir.try_normalize()?;
        Some(Self {
            origin,
            dir,
            max_range: max_range.unwrap_or_else(T::infinity),
        })
    }

    pub fn towards(origin: Vec3<T>, target: Vec3<T>, max_range: Option<T>) -> Option<Self> {
        Self::new(origin, target - origin, max_range)
    }

    #[inline]
    pub fn direction(&self) -> Vec3<T> {
        self.dir
    }

    #[inline]
    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<T> {
    pub t: T,
    pub face: usize,
    pub point: Vec3<T>,
}

/// Intersects one face, applying the accepted range `(RAY_EPSILON, max_range]`.
#[inline]
pub fn intersect_face<T: Real>(ray: &Ray<T>, tri: &Triangle<T>) -> Option<T> {
    ray_triangle(ray.origin, ray.dir, &tri.vertices)
        .filter(|&t| t > T::lit(RAY_EPSILON) && t <= ray.max_range)
}

/// `true` if hit `(t, face)` beats `best` under the (t, lowest index) order.
#[inline]
pub(crate) fn better_hit<T: Real>(t: T, face: usize, best: Option<(T, usize)>) -> bool {
    match best {
        None => true,
        Some((bt, bf)) => t < bt || (t == bt && face < bf),
    }
}

/// Immutable triangle soup with a bounding-volume hierarchy.
#[derive(Debug, Clone)]
pub struct TriangleMesh<T> {
    triangles: Vec<Triangle<T>>,
    bounds: Aabb<T>,
    bvh: Bvh<T>,
}

/// Meshes are equal when their face lists are.
impl<T: Real> PartialEq for TriangleMesh<T> {
    fn eq(&self, other: &Self) -> bool {
        self.triangles == other.triangles
    }
}

impl<T: Real> TriangleMesh<T> {
    /// Builds a mesh from raw vertex triples, dropping degenerate faces.
    ///
    /// Returns the mesh and the number of dropped faces.
    pub fn from_vertex_triples<I>(faces: I) -> Result<(Self, usize), MeshError>
    where
        I: IntoIterator<Item = [Vec3<T>; 3]>,
    {
        let mut dropped = 0;
        let mut tris = Vec::new();
        for [a, b, c] in faces {
            match Triangle::new(a, b, c) {
                Some(t) => tris.push(t),
                None => dropped += 1,
            }
        }
        Ok((Self::from_triangles(tris)?, dropped))
    }

    pub fn from_triangles(triangles: Vec<Triangle<T>>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let bounds = triangles
            .iter()
            .fold(Aabb::empty(), |b, t| b.union(&t.bounds()));
        let bvh = Bvh::build(&triangles);
        Ok(Self {
            triangles,
            bounds,
            bvh,
        })
    }

    #[inline]
    pub fn triangles(&self) -> &[Triangle<T>] {
        &self.triangles
    }

    #[inline]
    pub fn face(&self, i: usize) -> &Triangle<T> {
        &self.triangles[i]
    }

    /// Face count.
    #[inline]
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounds(&self) -> &Aabb<T> {
        &self.bounds
    }

    pub fn total_area(&self) -> T {
        self.triangles.iter().map(|t| t.area).sum()
    }

    /// Concatenates two meshes; faces of `other` follow those of `self`.
    pub fn merged(&self, other: &Self) -> Self {
        let mut tris = self.triangles.clone();
        tris.extend_from_slice(&other.triangles);
        Self::from_triangles(tris).expect("non-empty")
    }

    pub fn translated(&self, offset: Vec3<T>) -> Self {
        let tris = self
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.vertices;
                Triangle::new(a + offset, b + offset, c + offset).unwrap_or(*t)
            })
            .collect();
        Self::from_triangles(tris).expect("non-empty")
    }

    /// Nearest hit with `t` in `(1e-6, max_range]`; ties go to the lowest face index.
    pub fn ray_cast(&self, ray: &Ray<T>) -> Option<Hit<T>> {
        self.bvh
            .nearest_hit(&self.triangles, ray)
            .map(|(t, face)| Hit {
                t,
                face,
                point: ray.at(t),
            })
    }

    /// `true` if anything is hit within the ray range (early exit).
    pub fn ray_occluded(&self, ray: &Ray<T>) -> bool {
        self.bvh.any_hit(&self.triangles, ray)
    }

    /// `true` iff some mesh point lies within `clearance` of segment `ab`
    /// (capsule test, conservative by [`CLEARANCE_SLACK`]).
    pub fn segment_collides(&self, a: Vec3<T>, b: Vec3<T>, clearance: T) -> bool {
        let limit = clearance + T::lit(CLEARANCE_SLACK);
        self.bvh.any_near_segment(&self.triangles, a, b, limit, |tri| {
            segment_triangle_distance(a, b, &tri.vertices) <= limit
        })
    }

    /// Smallest distance from segment `ab` to the mesh.
    pub fn segment_distance(&self, a: Vec3<T>, b: Vec3<T>) -> T {
        self.triangles
            .iter()
            .map(|t| segment_triangle_distance(a, b, &t.vertices))
            .fold(T::infinity(), T::min)
    }
}
