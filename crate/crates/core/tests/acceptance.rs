//! End-to-end acceptance criteria, one PASS/FAIL line each.

mod common;

use std::time::{Duration, Instant};

use common::scenarios::{contact_task, sealed_room, TwoCorridors};
use common::{random_config, random_mesh};
use inspect_core::belief::{d_optimality, propagate_steps, Belief, Landmark, NoiseParams};
use inspect_core::contact::{plan_contact_tour, ContactMode};
use inspect_core::geometry::shapes::{cylinder, icosphere, unit_cube};
use inspect_core::inspection::coverage;
use inspect_core::nbv::{explore, ExploreParams};
use inspect_core::occupancy::VoxelState;
use inspect_core::oracle::{dense_ekf_step, grid_shortest_path, ray_cast_exhaustive, visible_set_exhaustive, voxels_in};
use inspect_core::rhem::{explore_uncertainty_aware, path_configurations, sample_candidate_paths, select_candidate, RhemParams};
use inspect_core::rrtot::{plan_optimal_inspection, RrtotParams};
use inspect_core::sensor::SensorModel;
use inspect_core::sip::{plan_inspection, SipParams};
use inspect_core::tour::{brute_force_path_from, brute_force_tour, solve_tour, CostMatrix};
use inspect_core::uc3d::{plan_uniform_inspection, UniformityParams};
use inspect_core::vehicle::VehicleModel;
use inspect_core::{Configuration, Ray, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn visibility_queries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mesh = random_mesh(&mut rng, 120);
    let sensor = SensorModel {
        d_max: 4.0,
        ..SensorModel::default()
    };
    let (mut hits, mut visible) = (0, 0);
    for i in 0..10_000 {
        let c = random_config(&mut rng, -3.0, 3.0);
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let Some(ray) = Ray::new(c.position, dir, None) else { continue };
        let hit = mesh.ray_cast(&ray);
        check(hit == ray_cast_exhaustive(&mesh, &ray), format!("ray cast {i} differs"))?;
        hits += hit.is_some() as usize;
        let got = sensor.visible_set(&c, &mesh);
        check(got == visible_set_exhaustive(&sensor, &c, &mesh), format!("visible set {i} differs"))?;
        visible += got.len();
    }
    Ok(format!("10000 queries, {hits} hits, {visible} visible faces"))
}

fn tsp_exactness() -> Outcome {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..8).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect();
        let m = CostMatrix::from_fn(8, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()).unwrap();
        let got = solve_tour(&m, true, 5, seed).map_err(|e| e.to_string())?;
        let best = brute_force_tour(&m, true).map_err(|e| e.to_string())?;
        check((got.cost - best.cost).abs() <= 1e-9, format!("seed {seed}: {} vs {}", got.cost, best.cost))?;
    }
    Ok("10 seeds equal brute force".into())
}

fn sip_cylinder() -> Outcome {
    let mesh = cylinder(Vec3::zero(), 0.5, 1.0, 50);
    let sensor = SensorModel::default();
    let r = plan_inspection(&mesh, &sensor, &VehicleModel::default(), None, &SipParams::default(), 1).map_err(|e| e.to_string())?;
    let expect: Vec<usize> = (0..mesh.len()).filter(|f| !r.excluded.contains(f)).collect();
    let covered = coverage(&sensor, &mesh, &r.path.viewpoints);
    check(expect.iter().all(|f| covered.contains(f)), "uncovered faces")?;
    check(r.cost_history.len() == 10, format!("{} iterations", r.cost_history.len()))?;
    check(r.cost_history.windows(2).all(|w| w[1] <= w[0]), "cost increased")?;
    Ok(format!("{} faces covered, {} excluded, cost {:.3}", expect.len(), r.excluded.len(), r.path.cost))
}

fn rrtot_cube() -> Outcome {
    let cube = unit_cube();
    let sensor = SensorModel {
        vfov: 90f64.to_radians(),
        ..SensorModel::default()
    };
    let vehicle = VehicleModel::default();
    let start = Configuration::from_xyz(2.5, 0.5, 0.5, std::f64::consts::PI);
    let r = plan_optimal_inspection(&cube, &sensor, &vehicle, None, start, &RrtotParams::default(), 1).map_err(|e| e.to_string())?;
    check(coverage(&sensor, &cube, &r.path.viewpoints).len() == 12, "incomplete coverage")?;
    let costs: Vec<f64> = r.history.iter().map(|h| h.1).collect();
    check(costs.windows(2).all(|w| w[1] <= w[0]), "history increased")?;
    check(costs.windows(2).any(|w| w[1] < w[0]), "no strict improvement")?;
    let sip = plan_inspection(&cube, &sensor, &vehicle, None, &SipParams::default(), 1).map_err(|e| e.to_string())?;
    let ratio = r.path.cost / sip.path.cost;
    check((0.5..=2.0).contains(&ratio), format!("cost ratio to SIP {ratio:.3}"))?;
    Ok(format!("cost {:.3} -> {:.3} over {} checkpoints, SIP ratio {ratio:.3}", costs[0], r.path.cost, costs.len()))
}

fn uc3d_sphere() -> Outcome {
    let sphere = icosphere(Vec3::new(0.0, 0.0, 1.5), 1.0, 3);
    check(sphere.len() == 1280, "sphere size")?;
    let sensor = SensorModel {
        vfov: 150f64.to_radians(),
        pitch: 0.0,
        ..SensorModel::default()
    };
    let params = UniformityParams {
        target_faces: Some(134),
        ..UniformityParams::for_sensor(&sensor)
    };
    let r = plan_uniform_inspection(&sphere, &params, &sensor, &VehicleModel::default(), None, 20, 3, 4).map_err(|e| e.to_string())?;
    let faces = r.mesh.len();
    check((107..=161).contains(&faces), format!("{faces} faces"))?;
    let (lo, hi) = r.audit.iter().fold((f64::MAX, f64::MIN), |(l, h), a| (l.min(a.distance), h.max(a.distance)));
    check(r.audit.len() == faces && hi - lo <= 2.0 * params.distance_band, format!("spread {:.4}", hi - lo))?;
    let worst = r.audit.iter().map(|a| a.angle).fold(0.0, f64::max);
    check(worst <= params.max_angle, format!("angle {:.2} deg", worst.to_degrees()))?;
    Ok(format!("{faces} faces, spread {:.3} m, max angle {:.1} deg", hi - lo, worst.to_degrees()))
}

fn nbv_room() -> Outcome {
    let (world, map_params, region, start) = sealed_room();
    let params = ExploreParams {
        region: Some(region),
        ..ExploreParams::default()
    };
    let sensor = SensorModel::default();
    let vehicle = VehicleModel::default();
    let a = explore(&world, start, &sensor, &vehicle, map_params, &params, 1).map_err(|e| e.to_string())?;
    let b = explore(&world, start, &sensor, &vehicle, map_params, &params, 1).map_err(|e| e.to_string())?;
    check(a.steps == b.steps, "reruns differ")?;
    check(a.steps.len() <= 200, "too many steps")?;
    check(a.steps.windows(2).all(|w| w[1].known_fraction >= w[0].known_fraction), "known fraction decreased")?;
    let interior = voxels_in(&a.map, &region);
    let known = interior.iter().filter(|k| a.map.state(**k) != VoxelState::Unknown).count();
    let fraction = known as f64 / interior.len() as f64;
    check(fraction >= 0.95, format!("classified {fraction:.4}"))?;
    Ok(format!("{:.1}% classified in {} steps", 100.0 * fraction, a.steps.len()))
}

fn room_landmarks() -> Vec<Landmark> {
    (0..12)
        .map(|i| Landmark {
            id: i,
            position: Vec3::new(0.3 + 0.3 * i as f64, 3.9, 1.0),
            active: true,
        })
        .collect()
}

fn rhem_selection() -> Outcome {
    let (world, map_params, region, start) = sealed_room();
    let sensor = SensorModel::default();
    let vehicle = VehicleModel::default();
    let params = RhemParams {
        explore: ExploreParams {
            max_steps: 20,
            region: Some(region),
            ..ExploreParams::default()
        },
        ..RhemParams::default()
    };
    let lms = room_landmarks();
    let log = explore_uncertainty_aware(&world, start, &sensor, &vehicle, &lms, map_params, &params, 3).map_err(|e| e.to_string())?;
    let mut belief = Belief::new(&start, params.pose_var, &lms, params.landmark_var);
    for s in &log.steps {
        check(s.min_eigenvalue > 1e-12, format!("step {} not SPD", s.step))?;
        let Some(path) = &s.path else { continue };
        check(s.candidate_d_opts.iter().all(|d| s.d_opt_chosen <= *d), format!("step {} not minimal", s.step))?;
        belief = propagate_steps(&belief, &path_configurations(path), &sensor, Some(&world), &params.noise).map_err(|e| e.to_string())?;
        let d = d_optimality(&belief.cov).map_err(|e| e.to_string())?;
        check((d - s.d_opt_chosen).abs() <= 1e-12 * d, format!("step {} d_opt recheck", s.step))?;
    }
    let sc = TwoCorridors::build();
    let noise = NoiseParams::default();
    let b0 = Belief::new(&sc.from, [1e-4; 4], &sc.landmarks, 1e-2);
    for seed in 0..5 {
        let candidates = sample_candidate_paths(&sc.map, &vehicle, &sc.from, &sc.to, sc.branches, &sc.search, seed, 0);
        let rich: Vec<bool> = candidates.iter().map(TwoCorridors::through_rich_gap).collect();
        check(rich.contains(&true) && rich.contains(&false), format!("seed {seed}: one corridor only"))?;
        let (best, evals) = select_candidate(&b0, candidates, &sc.sensor, Some(&sc.world), &noise).map_err(|e| e.to_string())?;
        check(rich[best], format!("seed {seed}: bare corridor chosen"))?;
        check(evals.iter().all(|e| e.min_eigenvalue > 1e-12), format!("seed {seed}: not SPD"))?;
    }
    Ok(format!("{} steps rechecked, rich corridor on 5/5 seeds", log.steps.len()))
}

fn ekf_oracle() -> Outcome {
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
    b.cov[(1, 5)] = -1e-4;
    b.cov[(5, 1)] = -1e-4;
    let expect = dense_ekf_step(&b.cov, &from, &to, &[(0, l)], &noise);
    b.predict(&to, &noise);
    b.update(0, &noise).map_err(|e| e.to_string())?;
    let err = (&b.cov - &expect).amax();
    check(err <= 1e-9, format!("max error {err:e}"))?;
    Ok(format!("max error {err:.2e}"))
}

fn contact_tour() -> Outcome {
    let task = contact_task();
    check(task.pois.len() == 7 && task.obstacles.len() == 2, "instance size")?;
    let legs = task.all_legs();
    let m = CostMatrix::from_fn(7, |i, j| legs[i][j].cost).map_err(|e| e.to_string())?;
    let exact = brute_force_path_from(&m, 0).map_err(|e| e.to_string())?;
    let tour = plan_contact_tour(&task, 0, 5, 1);
    check((tour.cost - exact.cost).abs() <= 1e-9, format!("{} vs {}", tour.cost, exact.cost))?;
    for leg in tour.legs.iter().filter(|l| l.mode == ContactMode::InContact) {
        for s in leg.polyline.windows(2) {
            let crosses = (1..1000).any(|i| task.in_obstacle(s[0] + (s[1] - s[0]) * (i as f64 / 1000.0)));
            check(!crosses, format!("leg {}->{} crosses an obstacle", leg.from, leg.to))?;
        }
    }
    let mut worst: f64 = 0.0;
    for p in 0..7 {
        for q in p + 1..7 {
            let (len, _) = task.surface_path(p, q).ok_or("no surface path")?;
            let grid = grid_shortest_path(&task, task.pois[p], task.pois[q], 0.05);
            worst = worst.max((len - grid).abs() / grid);
        }
    }
    check(worst <= 0.02, format!("detour gap {:.2}%", 100.0 * worst))?;
    Ok(format!("cost {:.3}, worst grid gap {:.2}%", tour.cost, 100.0 * worst))
}

fn reduction() -> Outcome {
    let (world, map_params, region, start) = sealed_room();
    let sensor = SensorModel::default();
    let vehicle = VehicleModel::default();
    let explore_params = ExploreParams {
        region: Some(region),
        ..ExploreParams::default()
    };
    let params = RhemParams {
        explore: explore_params.clone(),
        w_reobs: 0.0,
        branches: 1,
        noise: NoiseParams::zero(),
        ..RhemParams::default()
    };
    let nbv = explore(&world, start, &sensor, &vehicle, map_params, &explore_params, 7).map_err(|e| e.to_string())?;
    let rhem = explore_uncertainty_aware(&world, start, &sensor, &vehicle, &room_landmarks(), map_params, &params, 7).map_err(|e| e.to_string())?;
    check(nbv.steps.len() == rhem.steps.len(), format!("{} vs {} steps", nbv.steps.len(), rhem.steps.len()))?;
    for (a, b) in nbv.steps.iter().zip(&rhem.steps) {
        check(a.config == b.config && a.gain == b.gain, format!("step {} differs", a.step))?;
    }
    Ok(format!("{} identical steps", nbv.steps.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("1 visibility exactness", visibility_queries, 30),
        ("2 TSP exactness", tsp_exactness, 5),
        ("3 SIP coverage and monotonicity", sip_cylinder, 60),
        ("4 RRTOT improvement", rrtot_cube, 120),
        ("5 UC3D uniformity", uc3d_sphere, 60),
        ("6 NBV completeness", nbv_room, 120),
        ("7 RHEM selection optimality", rhem_selection, 60),
        ("8 EKF oracle", ekf_oracle, 5),
        ("9 contact tour", contact_tour, 30),
        ("10 RHEM reduces to NBV", reduction, 240),
    ];
    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let t = Instant::now();
        let outcome = run();
        let elapsed = t.elapsed();
        let outcome = outcome.and_then(|m| {
            if elapsed <= Duration::from_secs(limit) {
                Ok(m)
            } else {
                Err(format!("{m}; over the {limit} s budget"))
            }
        });
        match outcome {
            Ok(m) => println!("PASS {name} ({:.2} s): {m}", elapsed.as_secs_f64()),
            Err(m) => {
                println!("FAIL {name} ({:.2} s): {m}", elapsed.as_secs_f64());
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
