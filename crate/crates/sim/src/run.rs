//! Mode dispatch, mission metrics and output files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use inspect_core::belief::d_optimality;
use inspect_core::contact::{plan_contact_tour, write_contact_csv, ContactMode};
use inspect_core::geometry::io::{load_mesh_auto, write_obj};
use inspect_core::inspection::{write_path_csv, InspectionPath};
use inspect_core::nbv::explore;
use inspect_core::occupancy::OccupancyMap;
use inspect_core::rhem::explore_uncertainty_aware;
use inspect_core::rrtot::plan_optimal_inspection;
use inspect_core::sip::{plan_inspection, structure_coverage};
use inspect_core::uc3d::plan_uniform_inspection;
use inspect_core::vehicle::LocalPath;
use inspect_core::{Configuration, TriangleMesh};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{ErrorBlock, SimError};
use crate::scenario::{load_scenario, Mode, Scenario};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "INSPECT_PLAN_OUT";

/// Deterministic mission summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionReport {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub success: bool,
    /// Execution time of the planned mission, s.
    pub total_cost_s: Option<f64>,
    /// Inspected fraction of the structure (inspection and contact modes).
    pub coverage_fraction: Option<f64>,
    /// Known fraction of the exploration region.
    pub known_fraction: Option<f64>,
    pub details: BTreeMap<&'static str, Value>,
    pub warnings: Vec<String>,
    pub error: Option<ErrorBlock>,
    /// Wall-clock planning time, s; written to `timing.json` only.
    #[serde(skip)]
    pub planning_time_s: f64,
}

impl MissionReport {
    fn new(mode: Option<Mode>, seed: Option<u64>) -> Self {
        Self {
            mode,
            seed,
            success: false,
            total_cost_s: None,
            coverage_fraction: None,
            known_fraction: None,
            details: BTreeMap::new(),
            warnings: Vec::new(),
            error: None,
            planning_time_s: 0.0,
        }
    }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Output directory: `--out`, then the scenario's `output_dir`, then
/// [`OUT_DIR_ENV`], then `./out`.
pub fn output_dir(scenario: Option<&Scenario>, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| scenario.and_then(|s| s.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Loads and runs a scenario file. A report is written even on failure.
pub fn plan_file(path: &Path, overrides: &Overrides) -> (MissionReport, PathBuf, Result<(), SimError>) {
    let loaded = load_scenario(path).map(|mut s| {
        if let Some(seed) = overrides.seed {
            s.seed = seed;
        }
        s
    });
    let out = output_dir(loaded.as_ref().ok(), overrides);
    let (mut report, result) = match loaded {
        Ok(s) => {
            let mut report = MissionReport::new(Some(s.mode), Some(s.seed));
            let result = fs::create_dir_all(&out).map_err(SimError::from).and_then(|_| run(&s, &out, &mut report));
            (report, result)
        }
        Err(e) => (MissionReport::new(None, overrides.seed), Err(e)),
    };
    if let Err(e) = &result {
        report.success = false;
        report.error = Some(e.block());
    }
    let written = fs::create_dir_all(&out).map_err(SimError::from).and_then(|_| write_report(&out, &report));
    let result = result.and(written);
    (report, out, result)
}

fn write_report(out: &Path, report: &MissionReport) -> Result<(), SimError> {
    write_json(&out.join("report.json"), report)?;
    write_json(&out.join("timing.json"), &json!({ "planning_time_s": report.planning_time_s }))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SimError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| SimError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, SimError> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn load(path: &Path) -> Result<TriangleMesh, SimError> {
    load_mesh_auto(path).map(|m| m.mesh).map_err(|e| SimError::planner("geometry_core", e))
}

/// Runs a validated scenario, writing outputs into `out` and filling `report`.
pub fn run(s: &Scenario, out: &Path, report: &mut MissionReport) -> Result<(), SimError> {
    let t = Instant::now();
    let result = match s.mode {
        Mode::Sip | Mode::Rrtot | Mode::Uc3d => run_inspection(s, out, report),
        Mode::Nbv | Mode::Rhem => run_exploration(s, out, report),
        Mode::Contact => run_contact(s, out, report),
    };
    report.planning_time_s = t.elapsed().as_secs_f64();
    result?;
    report.success = true;
    Ok(())
}

fn write_viewpoints(out: &Path, viewpoints: &[Configuration]) -> Result<(), SimError> {
    let mut w = create(out, "viewpoints.csv")?;
    writeln!(w, "index,x_m,y_m,z_m,yaw_rad")?;
    for (i, c) in viewpoints.iter().enumerate() {
        let p = c.position;
        writeln!(w, "{},{:.6},{:.6},{:.6},{:.6}", i, p.x, p.y, p.z, c.yaw())?;
    }
    w.flush()?;
    Ok(())
}

fn finish_inspection(
    out: &Path,
    report: &mut MissionReport,
    sensor: &inspect_core::sensor::SensorModel,
    structure: &TriangleMesh,
    obstacles: Option<&TriangleMesh>,
    path: &InspectionPath,
) -> Result<(), SimError> {
    let world = match obstacles {
        Some(o) => structure.merged(o),
        None => structure.clone(),
    };
    let covered = structure_coverage(sensor, &world, structure.len(), &path.viewpoints);
    report.total_cost_s = Some(path.cost);
    report.coverage_fraction = Some(covered.len() as f64 / structure.len() as f64);
    report.details.insert("structure_faces", json!(structure.len()));
    report.details.insert("covered_faces", json!(covered.len()));
    report.details.insert("viewpoints", json!(path.viewpoints.len()));
    let mut w = create(out, "path.csv")?;
    path.write_csv(&mut w)?;
    w.flush()?;
    write_viewpoints(out, &path.viewpoints)
}

fn run_inspection(s: &Scenario, out: &Path, report: &mut MissionReport) -> Result<(), SimError> {
    let structure = load(s.structure.as_ref().expect("validated"))?;
    let obstacles = s.world.as_deref().map(load).transpose()?;
    let sensor = s.sensor.model();
    let vehicle = s.vehicle.model();
    match s.mode {
        Mode::Sip => {
            let r = plan_inspection(&structure, &sensor, &vehicle, obstacles.as_ref(), &s.sip.params(), s.seed)
                .map_err(|e| SimError::planner("sip_planner", e))?;
            if !r.excluded.is_empty() {
                report.warnings.push(format!("faces excluded as unobservable: {:?}", r.excluded));
            }
            report.details.insert("excluded_faces", json!(r.excluded));
            let mut w = create(out, "cost_history.csv")?;
            writeln!(w, "iteration,cost_s")?;
            for (i, c) in r.cost_history.iter().enumerate() {
                writeln!(w, "{},{:.6}", i + 1, c)?;
            }
            w.flush()?;
            finish_inspection(out, report, &sensor, &structure, obstacles.as_ref(), &r.path)?;
            let feasible = structure.len() - r.excluded.len();
            let covered = r.path.covered.iter().filter(|f| !r.excluded.contains(f)).count();
            report.details.insert("feasible_coverage_fraction", json!(covered as f64 / feasible.max(1) as f64));
            Ok(())
        }
        Mode::Rrtot => {
            let start = s.start.expect("validated").config();
            let r = plan_optimal_inspection(&structure, &sensor, &vehicle, obstacles.as_ref(), start, &s.rrtot.params(), s.seed)
                .map_err(|e| SimError::planner("rrtot_planner", e))?;
            report.details.insert("tree_vertices", json!(r.vertices));
            let mut w = create(out, "cost_history.csv")?;
            writeln!(w, "iteration,cost_s")?;
            for (i, c) in &r.history {
                writeln!(w, "{},{:.6}", i, c)?;
            }
            w.flush()?;
            finish_inspection(out, report, &sensor, &structure, obstacles.as_ref(), &r.path)
        }
        _ => {
            let params = s.uc3d.params(&sensor);
            let r = plan_uniform_inspection(&structure, &params, &sensor, &vehicle, obstacles.as_ref(), s.uc3d.max_restarts, s.uc3d.tour_restarts, s.seed)
                .map_err(|e| SimError::planner("uc3d_planner", e))?;
            if r.restarts > 1 {
                report.warnings.push(format!("feasible tour found on restart {}", r.restarts));
            }
            report.details.insert("restarts", json!(r.restarts));
            report.details.insert("input_faces", json!(structure.len()));
            let mut w = create(out, "audit.csv")?;
            writeln!(w, "face,distance_m,angle_deg")?;
            for a in &r.audit {
                writeln!(w, "{},{:.6},{:.6}", a.face, a.distance, a.angle.to_degrees())?;
            }
            w.flush()?;
            let mut w = create(out, "structure.obj")?;
            write_obj(&r.mesh, &mut w)?;
            w.flush()?;
            finish_inspection(out, report, &sensor, &r.mesh, obstacles.as_ref(), &r.path)
        }
    }
}

/// Time-stamped samples along consecutive local paths.
fn timed_legs<'a>(start: Configuration, legs: impl Iterator<Item = &'a LocalPath>) -> (Vec<(f64, Configuration)>, f64) {
    let mut out = vec![(0.0, start)];
    let mut t = 0.0;
    for leg in legs {
        let n = leg.waypoints.len();
        for (k, w) in leg.waypoints.iter().enumerate().skip(1) {
            out.push((t + leg.cost * k as f64 / (n - 1) as f64, *w));
        }
        t += leg.cost;
    }
    (out, t)
}

fn write_map(out: &Path, map: &OccupancyMap) -> Result<(), SimError> {
    let mut w = create(out, "map.ply")?;
    map.write_occupied_ply(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_exploration(s: &Scenario, out: &Path, report: &mut MissionReport) -> Result<(), SimError> {
    let world = load(s.world.as_ref().expect("validated"))?;
    let map_cfg = s.map.expect("validated");
    let start = s.start.expect("validated").config();
    let sensor = s.sensor.model();
    let vehicle = s.vehicle.model();
    let region = map_cfg.region();
    let explore_params = s.nbv.params(region);
    let (samples, cost, map, steps, stuck) = if s.mode == Mode::Nbv {
        let log = explore(&world, start, &sensor, &vehicle, map_cfg.params(), &explore_params, s.seed)
            .map_err(|e| SimError::planner("explorer_nbv", e))?;
        let mut w = create(out, "steps.csv")?;
        log.write_csv(&mut w)?;
        w.flush()?;
        let (samples, cost) = timed_legs(start, log.steps.iter().filter_map(|st| st.path.as_ref()));
        (samples, cost, log.map, log.steps.len(), log.stuck)
    } else {
        let params = s.rhem.params(explore_params);
        let log = explore_uncertainty_aware(&world, start, &sensor, &vehicle, &s.rhem.landmarks(), map_cfg.params(), &params, s.seed)
            .map_err(|e| SimError::planner("explorer_rhem", e))?;
        let mut w = create(out, "steps.csv")?;
        log.write_csv(&mut w)?;
        w.flush()?;
        let fallbacks = log.steps.iter().filter(|st| st.fallback).count();
        if fallbacks > 0 {
            report.warnings.push(format!("{fallbacks} steps fell back to the first-layer edge"));
        }
        let d = d_optimality(&log.belief.cov).map_err(|e| SimError::planner("explorer_rhem", e))?;
        report.details.insert("final_d_opt", json!(d));
        report.details.insert("landmarks", json!(log.belief.landmark_ids.len()));
        let legs = log.steps.iter().filter_map(|st| st.path.as_ref()).flat_map(|p| p.legs.iter());
        let (samples, cost) = timed_legs(start, legs);
        (samples, cost, log.map, log.steps.len(), log.stuck)
    };
    if stuck {
        report.warnings.push("stuck: no free-space expansion possible".to_string());
    }
    let region = region.unwrap_or(*map.bounds());
    report.total_cost_s = Some(cost);
    report.known_fraction = Some(map.known_fraction(&region));
    report.details.insert("steps", json!(steps));
    report.details.insert("stuck", json!(stuck));
    let mut w = create(out, "path.csv")?;
    write_path_csv(&mut w, &samples)?;
    w.flush()?;
    write_map(out, &map)
}

fn run_contact(s: &Scenario, out: &Path, report: &mut MissionReport) -> Result<(), SimError> {
    let cfg = s.contact.as_ref().expect("validated");
    let task = cfg.task();
    let tour = plan_contact_tour(&task, cfg.start, cfg.restarts, s.seed);
    let in_contact = tour.legs.iter().filter(|l| l.mode == ContactMode::InContact).count();
    report.total_cost_s = Some(tour.cost);
    report.coverage_fraction = Some(tour.order.len() as f64 / task.pois.len() as f64);
    report.details.insert("order", json!(tour.order));
    report.details.insert("in_contact_legs", json!(in_contact));
    report.details.insert("undock_legs", json!(tour.legs.len() - in_contact));
    let mut w = create(out, "contact.csv")?;
    write_contact_csv(&mut w, &task, &tour)?;
    w.flush()?;
    let yaw = (-task.normal.y).atan2(-task.normal.x);
    let mut samples = vec![(0.0, Configuration::new(task.to_world(task.pois[cfg.start]), yaw))];
    let mut t = 0.0;
    for leg in &tour.legs {
        let pts: Vec<_> = task.leg_waypoints(leg).into_iter().map(|(_, p)| p).collect();
        let total: f64 = pts.windows(2).map(|w| w[0].distance(w[1])).sum();
        let mut along = 0.0;
        for w in pts.windows(2) {
            along += w[0].distance(w[1]);
            let frac = if total > 0.0 { along / total } else { 1.0 };
            samples.push((t + leg.cost * frac, Configuration::new(w[1], yaw)));
        }
        t += leg.cost;
    }
    let mut w = create(out, "path.csv")?;
    write_path_csv(&mut w, &samples)?;
    w.flush()?;
    Ok(())
}
