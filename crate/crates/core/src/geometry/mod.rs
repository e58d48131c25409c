//! Geometric kernel: vectors, configurations, triangle meshes, mesh IO and
//! exact ray / segment queries.
//!
//! Everything here is generic over [`Real`] so the same code serves `f32`
//! scenes and the `f64` planners.

mod aabb;
mod bvh;
mod indexed;
pub mod io;
mod mesh;
pub mod primitives;
mod scalar;
pub mod shapes;
mod vec3;

pub use aabb::Aabb;
pub use indexed::IndexedMesh;
pub use io::{load_mesh, load_mesh_auto, save_mesh, LoadedMesh, MeshFormat};
pub use mesh::{intersect_face, Hit, MeshError, Ray, Triangle, TriangleMesh, CLEARANCE_SLACK};
pub use primitives::RAY_EPSILON;
pub use scalar::{angle_diff, wrap_angle, Real};
pub use vec3::{Configuration, Vec3};
