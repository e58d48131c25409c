//! Exact ray, point, segment and triangle queries.
//!
//! These are the leaf routines shared by the hierarchy traversal and by the
//! exhaustive reference loops, so both paths produce bit-identical answers.

use super::scalar::Real;
use super::vec3::Vec3;

/// Minimum accepted ray parameter; hits closer than this are ignored.
pub const RAY_EPSILON: f64 = 1e-6;

/// Slack on the barycentric coordinates of a ray hit.
pub const EDGE_TOLERANCE: f64 = 1e-9;

/// Double-sided ray/triangle intersection (Moller-Trumbore).
///
/// Returns the ray parameter of the hit for unit-length `dir`. Rays parallel
/// to the triangle plane never hit. Barycentric bounds are widened by
/// [`EDGE_TOLERANCE`] so rays through a shared edge cannot slip between
/// the two faces.
#[inline]
pub fn ray_triangle<T: Real>(origin: Vec3<T>, dir: Vec3<T>, v: &[Vec3<T>; 3]) -> Option<T> {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    let scale = e1.cross(e2).norm();
    if det.abs() <= T::epsilon() * scale {
        return None;
    }
    let inv = T::one() / det;
    let s = origin - v[0];
    let tol = T::lit(EDGE_TOLERANCE);
    let u = s.dot(p) * inv;
    if u < -tol || u > T::one() + tol {
        return None;
    }
    let q = s.cross(e1);
    let w = dir.dot(q) * inv;
    if w < -tol || u + w > T::one() + tol {
        return None;
    }
    Some(e2.dot(q) * inv)
}

/// Closest point on triangle `v` to `p`.
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, v: &[Vec3<T>; 3]) -> Vec3<T> {
    let (a, b, c) = (v[0], v[1], v[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    let zero = T::zero();
    if d1 <= zero && d2 <= zero {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let s = d1 / (d1 - d3);
        return a + ab * s;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let s = d2 / (d2 - d6);
        return a + ac * s;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let s = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * s;
    }
    let denom = T::one() / (va + vb + vc);
    let sv = vb * denom;
    let sw = vc * denom;
    a + ab * sv + ac * sw
}

/// Closest point on segment `ab` to `p`, as a parameter in `[0, 1]`.
pub fn closest_param_on_segment<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>) -> T {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 <= T::zero() {
        return T::zero();
    }
    ((p - a).dot(d) / len2).max(T::zero()).min(T::one())
}

pub fn point_segment_distance<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>) -> T {
    let s = closest_param_on_segment(p, a, b);
    p.distance(a.lerp(b, s))
}

/// Minimum distance between segments `p1q1` and `p2q2`.
pub fn segment_segment_distance<T: Real>(p1: Vec3<T>, q1: Vec3<T>, p2: Vec3<T>, q2: Vec3<T>) -> T {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);
    let zero = T::zero();
    let one = T::one();
    let tiny = T::epsilon() * T::epsilon();
    let (s, t);
    if a <= tiny && e <= tiny {
        return p1.distance(p2);
    }
    if a <= tiny {
        s = zero;
        t = (f / e).max(zero).min(one);
    } else {
        let c = d1.dot(r);
        if e <= tiny {
            t = zero;
            s = (-c / a).max(zero).min(one);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > zero {
                ((b * f - c * e) / denom).max(zero).min(one)
            } else {
                zero
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < zero {
                t0 = zero;
                s0 = (-c / a).max(zero).min(one);
            } else if t0 > one {
                t0 = one;
                s0 = ((b - c) / a).max(zero).min(one);
            }
            s = s0;
            t = t0;
        }
    }
    (p1 + d1 * s).distance(p2 + d2 * t)
}

/// True if the closed segment `ab` touches the triangle.
pub fn segment_intersects_triangle<T: Real>(a: Vec3<T>, b: Vec3<T>, v: &[Vec3<T>; 3]) -> bool {
    let d = b - a;
    let len = d.norm();
    if len <= T::zero() {
        return false;
    }
    let dir = d / len;
    // Unlike ray casts, the segment test accepts parameter 0.
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() <= T::epsilon() * e1.cross(e2).norm() {
        return false;
    }
    let inv = T::one() / det;
    let s = a - v[0];
    let tol = T::lit(EDGE_TOLERANCE);
    let u = s.dot(p) * inv;
    if u < -tol || u > T::one() + tol {
        return false;
    }
    let q = s.cross(e1);
    let w = dir.dot(q) * inv;
    if w < -tol || u + w > T::one() + tol {
        return false;
    }
    let t = e2.dot(q) * inv;
    t >= T::zero() && t <= len
}

/// Exact minimum distance between segment `ab` and a triangle.
pub fn segment_triangle_distance<T: Real>(a: Vec3<T>, b: Vec3<T>, v: &[Vec3<T>; 3]) -> T {
    if segment_intersects_triangle(a, b, v) {
        return T::zero();
    }
    let mut best = a.distance(closest_point_on_triangle(a, v));
    best = best.min(b.distance(closest_point_on_triangle(b, v)));
    for k in 0..3 {
        best = best.min(segment_segment_distance(a, b, v[k], v[(k + 1) % 3]));
    }
    best
}
