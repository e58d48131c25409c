use std::collections::{BTreeMap, HashMap};

use super::mesh::{MeshError, TriangleMesh};
use super::scalar::Real;
use super::vec3::Vec3;

/// Shared-vertex view of a triangle soup.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
}

impl<T: Real> IndexedMesh<T> {
    /// Merges vertices whose coordinates agree to within `tolerance`.
    pub fn weld(mesh: &TriangleMesh<T>, tolerance: T) -> Self {
        let q = |x: T| (x / tolerance).round().to_f64_lossy() as i64;
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let faces = mesh
            .triangles()
            .iter()
            .map(|t| {
                t.vertices.map(|v| {
                    *index.entry([q(v.x), q(v.y), q(v.z)]).or_insert_with(|| {
                        vertices.push(v);
                        vertices.len() - 1
                    })
                })
            })
            .collect();
        Self { vertices, faces }
    }

    /// Undirected edges with the number of faces using each.
    pub fn edge_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut edges = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Every edge is shared by exactly two faces.
    pub fn is_closed_manifold(&self) -> bool {
        !self.faces.is_empty() && self.edge_counts().values().all(|&c| c == 2)
    }

    /// `V - E + F` over the vertices referenced by faces.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_counts().len() as i64 + self.faces.len() as i64
    }

    pub fn to_mesh(&self) -> Result<(TriangleMesh<T>, usize), MeshError> {
        TriangleMesh::from_vertex_triples(self.faces.iter().map(|f| f.map(|i| self.vertices[i])))
    }
}
