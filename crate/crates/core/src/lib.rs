//! Planning toolkit for structural inspection and autonomous exploration
//! with aerial robots.
//!
//! The geometric kernel in [`geometry`] is generic over the scalar type; the
//! planners run on `f64` through the aliases exported here.

pub mod geometry;

/// 3D vector in meters.
pub type Vec3 = geometry::Vec3<f64>;
/// Single-precision vector, for loading large scenes.
pub type Vec3f = geometry::Vec3<f32>;
/// Viewpoint state: position and heading.
pub type Configuration = geometry::Configuration<f64>;
pub type Triangle = geometry::Triangle<f64>;
pub type TriangleMesh = geometry::TriangleMesh<f64>;
pub type TriangleMeshf = geometry::TriangleMesh<f32>;
pub type Ray = geometry::Ray<f64>;
pub type Hit = geometry::Hit<f64>;
pub type Aabb = geometry::Aabb<f64>;

pub mod occupancy;
pub mod sensor;
pub mod vehicle;
pub mod search;
pub mod tour;
pub mod inspection;
pub mod sip;
pub mod graph;
pub mod rrtot;
pub mod uc3d;
pub mod nbv;
pub mod belief;
pub mod rhem;
pub mod contact;
pub mod oracle;
