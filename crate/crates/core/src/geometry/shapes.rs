//! Procedural meshes used by scenarios and tests.

use std::collections::HashMap;

use super::mesh::{Triangle, TriangleMesh};
use super::scalar::Real;
use super::vec3::Vec3;

fn build<T: Real>(faces: Vec<[Vec3<T>; 3]>) -> TriangleMesh<T> {
    let tris = faces
        .into_iter()
        .filter_map(|[a, b, c]| Triangle::new(a, b, c))
        .collect();
    TriangleMesh::from_triangles(tris).expect("procedural mesh is non-empty")
}

/// Two triangles `(a, b, c)` and `(a, c, d)`; counter-clockwise seen from the front.
pub fn quad_faces<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>) -> [[Vec3<T>; 3]; 2] {
    [[a, b, c], [a, c, d]]
}

fn box_faces<T: Real>(min: Vec3<T>, max: Vec3<T>) -> Vec<[Vec3<T>; 3]> {
    let p = |x: bool, y: bool, z: bool| {
        Vec3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let quads = [
        // -x, +x
        [p(false, false, false), p(false, false, true), p(false, true, true), p(false, true, false)],
        [p(true, false, false), p(true, true, false), p(true, true, true), p(true, false, true)],
        // -y, +y
        [p(false, false, false), p(true, false, false), p(true, false, true), p(false, false, true)],
        [p(false, true, false), p(false, true, true), p(true, true, true), p(true, true, false)],
        // -z, +z
        [p(false, false, false), p(false, true, false), p(true, true, false), p(true, false, false)],
        [p(false, false, true), p(true, false, true), p(true, true, true), p(false, true, true)],
    ];
    quads
        .iter()
        .flat_map(|q| quad_faces(q[0], q[1], q[2], q[3]))
        .collect()
}

/// Closed axis-aligned box with outward normals (12 faces).
pub fn box_mesh<T: Real>(min: Vec3<T>, max: Vec3<T>) -> TriangleMesh<T> {
    build(box_faces(min, max))
}

/// The `[0, 1]^3` cube.
pub fn unit_cube<T: Real>() -> TriangleMesh<T> {
    box_mesh(Vec3::zero(), Vec3::splat(T::one()))
}

/// Closed box with inward-facing normals, i.e. a sealed room.
pub fn room<T: Real>(min: Vec3<T>, max: Vec3<T>) -> TriangleMesh<T> {
    build(box_faces(min, max).into_iter().map(|[a, b, c]| [a, c, b]).collect())
}

/// Trough made of a floor and two side walls along x (6 faces, open on
/// top and at both ends).
pub fn open_box<T: Real>(min: Vec3<T>, max: Vec3<T>) -> TriangleMesh<T> {
    let faces: Vec<_> = box_faces(min, max)
        .into_iter()
        .enumerate()
        // keep -y, +y and -z quads
        .filter(|(i, _)| matches!(i / 2, 2..=4))
        .map(|(_, f)| f)
        .collect();
    build(faces)
}

/// Closed cylinder along +z with `segments` sides: `4 * segments` faces.
pub fn cylinder<T: Real>(base_center: Vec3<T>, radius: T, height: T, segments: usize) -> TriangleMesh<T> {
    assert!(segments >= 3);
    let top_center = base_center + Vec3::new(T::zero(), T::zero(), height);
    let ring = |i: usize, z: T| {
        let a = T::lit(2.0 * std::f64::consts::PI * (i % segments) as f64 / segments as f64);
        base_center + Vec3::new(radius * a.cos(), radius * a.sin(), z)
    };
    let mut faces = Vec::with_capacity(4 * segments);
    for i in 0..segments {
        let (b0, b1) = (ring(i, T::zero()), ring(i + 1, T::zero()));
        let (t0, t1) = (ring(i, height), ring(i + 1, height));
        faces.extend(quad_faces(b0, b1, t1, t0));
        faces.push([top_center, t0, t1]);
        faces.push([base_center, b1, b0]);
    }
    build(faces)
}

/// Geodesic sphere from a subdivided icosahedron: `20 * 4^subdivisions` faces.
pub fn icosphere<T: Real>(center: Vec3<T>, radius: T, subdivisions: u32) -> TriangleMesh<T> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let norm = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in verts.iter_mut() {
        *v = norm(*v);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(norm([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let to_world = |v: [f64; 3]| center + Vec3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2])) * radius;
    build(
        faces
            .into_iter()
            .map(|[a, b, c]| [to_world(verts[a]), to_world(verts[b]), to_world(verts[c])])
            .collect(),
    )
}

/// Vertical wall in the plane `x = x0` spanning `y` in `[y_min, y_max]` and
/// `z` in `[z_min, z_max]`, with thickness `thickness` and an open gap of
/// width `gap` centred at `y = gap_center`. Built from two closed boxes.
pub fn wall_with_gap<T: Real>(
    x0: T,
    thickness: T,
    (y_min, y_max): (T, T),
    (z_min, z_max): (T, T),
    gap_center: T,
    gap: T,
) -> TriangleMesh<T> {
    let half = gap * T::lit(0.5);
    let h = thickness * T::lit(0.5);
    let mut faces = box_faces(
        Vec3::new(x0 - h, y_min, z_min),
        Vec3::new(x0 + h, gap_center - half, z_max),
    );
    faces.extend(box_faces(
        Vec3::new(x0 - h, gap_center + half, z_min),
        Vec3::new(x0 + h, y_max, z_max),
    ));
    build(faces)
}
