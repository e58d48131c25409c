//! Brute-force oracle checks exposed on the command line.

use inspect_core::belief::{Belief, Landmark, NoiseParams};
use inspect_core::oracle::{dense_ekf_step, dubins_csc_numeric, ray_cast_exhaustive, visible_set_exhaustive};
use inspect_core::sensor::SensorModel;
use inspect_core::tour::{brute_force_tour, solve_tour, CostMatrix};
use inspect_core::vehicle::dubins::DubinsPath;
use inspect_core::{Configuration, Ray, Triangle, TriangleMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    /// Heuristic tours against exhaustive enumeration (10 seeds, 8 nodes).
    Tsp,
    /// Accelerated ray casts and visible sets against per-face loops.
    Visibility,
    /// One filter step against a dense-matrix implementation.
    Ekf,
    /// Closed-form Dubins lengths against a numeric search.
    Dubins,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn report(check: &'static str, cases: usize, max_error: f64, tolerance: f64) -> CheckReport {
    CheckReport {
        check,
        cases,
        max_error,
        tolerance,
        passed: max_error <= tolerance,
    }
}

pub fn run_check(check: Check) -> CheckReport {
    match check {
        Check::Tsp => tsp(),
        Check::Visibility => visibility(),
        Check::Ekf => ekf(),
        Check::Dubins => dubins(),
    }
}

fn tsp() -> CheckReport {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..8).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect();
        let m = CostMatrix::from_fn(8, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()).expect("finite costs");
        let got = solve_tour(&m, true, 5, seed).expect("8 nodes").cost;
        let best = brute_force_tour(&m, true).expect("8 nodes").cost;
        worst = worst.max((got - best).abs());
    }
    report("tsp", 10, worst, 1e-9)
}

fn visibility() -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let point = |rng: &mut ChaCha8Rng, s: f64| Vec3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s));
    let mut tris = Vec::new();
    while tris.len() < 120 {
        let c = point(&mut rng, 2.0);
        if let Some(t) = Triangle::new(c + point(&mut rng, 0.6), c + point(&mut rng, 0.6), c + point(&mut rng, 0.6)) {
            tris.push(t);
        }
    }
    let mesh = TriangleMesh::from_triangles(tris).expect("non-empty");
    let sensor = SensorModel {
        d_max: 4.0,
        ..SensorModel::default()
    };
    let mut mismatches = 0usize;
    let cases = 10_000;
    for _ in 0..cases {
        let c = Configuration::new(point(&mut rng, 3.0), rng.gen_range(-3.1..3.1));
        let dir = point(&mut rng, 1.0);
        if let Some(ray) = Ray::new(c.position, dir, None) {
            mismatches += (mesh.ray_cast(&ray) != ray_cast_exhaustive(&mesh, &ray)) as usize;
        }
        mismatches += (sensor.visible_set(&c, &mesh) != visible_set_exhaustive(&sensor, &c, &mesh)) as usize;
    }
    report("visibility", cases, mismatches as f64, 0.0)
}

fn ekf() -> CheckReport {
    let from = Configuration::from_xyz(0.2, -0.1, 1.0, 0.4);
    let to = Configuration::from_xyz(0.5, 0.2, 1.1, 0.6);
    let l = Vec3::new(2.5, 1.0, 1.3);
    let noise = NoiseParams::default();
    let lm = [Landmark {
        id: 0,
        position: l,
        active: true,
    }];
    let mut b = Belief::new(&from, [1e-3, 2e-3, 5e-4, 1e-3], &lm, 1e-2);
    b.cov[(0, 3)] = 2e-4;
    b.cov[(3, 0)] = 2e-4;
    let expect = dense_ekf_step(&b.cov, &from, &to, &[(0, l)], &noise);
    b.predict(&to, &noise);
    let err = match b.update(0, &noise) {
        Ok(()) => (&b.cov - &expect).amax(),
        Err(_) => f64::INFINITY,
    };
    report("ekf", 1, err, 1e-9)
}

fn dubins() -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let cases = 25;
    for _ in 0..cases {
        let r = rng.gen_range(0.2..1.5);
        let start = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-3.1..3.1));
        let ang: f64 = rng.gen_range(-3.1..3.1);
        let d = rng.gen_range(4.2 * r..10.0 * r);
        let goal = (start.0 + d * ang.cos(), start.1 + d * ang.sin(), rng.gen_range(-3.1..3.1));
        let fast = DubinsPath::shortest(start, goal, r).map_or(f64::INFINITY, |p| p.length());
        let slow = dubins_csc_numeric(start, goal, r);
        worst = worst.max((fast - slow).abs() / (1.0 + slow));
    }
    report("dubins", cases, worst, 1e-6)
}
