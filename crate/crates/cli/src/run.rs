//! Task execution and artifact writing.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rotorbit_core::curves::geodesic_of;
use rotorbit_core::dynamics::{area_check, build_map, LiftedMap, MapSpec};
use rotorbit_core::realization::{periodic_point_search, realize, RealizationAttempt};
use rotorbit_core::rotation::{
    deviation_stats, direction_net, hausdorff_to_segment, hull_dimension, measure_vector_lebesgue, mz_estimate,
    random_directions, RotationConfig, RotationSetEstimate, SupportTarget, TorusMap,
};
use rotorbit_core::{filling_check, CurveClass, SurfaceGroup};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ExperimentConfig, Task};

pub const REPORT_SCHEMA: u32 = 1;

/// Tolerances for the surface check.
pub const RELATOR_TOL: f64 = 1e-9;
pub const AREA_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Core(#[from] rotorbit_core::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("io: {0}")]
    Io(String),
}

impl TaskError {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskError::Core(e) => e.kind(),
            TaskError::CheckFailed(_) => "CheckFailed",
            TaskError::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for TaskError {
    fn from(e: std::io::Error) -> Self {
        TaskError::Io(e.to_string())
    }
}

impl From<csv::Error> for TaskError {
    fn from(e: csv::Error) -> Self {
        TaskError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub task: Task,
    pub status: &'static str,
    pub wall_clock_ms: u128,
    pub metrics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl TaskReport {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskReport>,
    pub files: Vec<FileEntry>,
    pub wall_clock_ms: u128,
    pub timestamp_unix: u64,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.tasks.iter().all(TaskReport::ok)
    }
}

/// State shared between tasks of one run.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    group: Option<SurfaceGroup>,
    map: Option<LiftedMap>,
    estimate: Option<RotationSetEstimate>,
    files: Vec<String>,
}

impl<'a> Context<'a> {
    fn group(&mut self) -> Result<&SurfaceGroup, TaskError> {
        if self.group.is_none() {
            self.group = Some(SurfaceGroup::standard(self.cfg.genus)?);
        }
        Ok(self.group.as_ref().expect("set"))
    }

    fn map(&mut self) -> Result<&LiftedMap, TaskError> {
        if self.map.is_none() {
            let spec = MapSpec {
                shears: self.cfg.shears.clone(),
            };
            spec.require_nonempty()?;
            let group = self.group()?.clone();
            self.map = Some(build_map(&spec, &group)?);
        }
        Ok(self.map.as_ref().expect("set"))
    }

    fn estimate(&mut self) -> Result<&RotationSetEstimate, TaskError> {
        if self.estimate.is_none() {
            let rc = self.cfg.rotation_config();
            let est = mz_estimate(self.map()?, &rc)?;
            self.estimate = Some(est);
        }
        Ok(self.estimate.as_ref().expect("set"))
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), TaskError> {
        fs::write(self.out.join(name), bytes)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), TaskError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| TaskError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Curves of the filling check: the configured list, or the shear curves.
    fn curve_classes(&mut self) -> Result<Vec<CurveClass>, TaskError> {
        let words: Vec<_> = if self.cfg.curves.is_empty() {
            self.cfg.shears.iter().map(|s| s.curve.clone()).collect()
        } else {
            self.cfg.curves.clone()
        };
        let group = self.group()?.clone();
        Ok(words
            .iter()
            .map(|w| geodesic_of(w, &group))
            .collect::<Result<_, _>>()?)
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, TaskError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| TaskError::Io(e.to_string()))
}

fn surface_check(ctx: &mut Context) -> Result<Value, TaskError> {
    let group = ctx.group()?;
    let residual = group.relator_residual();
    let area = group.domain.area();
    let expected = 4.0 * PI * (group.genus as f64 - 1.0);
    let metrics = json!({
        "genus": group.genus,
        "relator_residual": residual,
        "relator_tolerance": RELATOR_TOL,
        "area": area,
        "expected_area": expected,
        "area_error": (area - expected).abs(),
        "area_tolerance": AREA_TOL,
        "circumradius": group.domain.circumradius,
        "inradius": group.domain.inradius,
    });
    if residual > RELATOR_TOL || (area - expected).abs() > AREA_TOL {
        return Err(TaskError::CheckFailed(metrics.to_string()));
    }
    Ok(metrics)
}

fn filling(ctx: &mut Context) -> Result<Value, TaskError> {
    let curves = ctx.curve_classes()?;
    let group = ctx.group()?.clone();
    let rep = filling_check(&curves, &group)?;
    let words: Vec<String> = curves.iter().map(|c| c.word.to_string()).collect();
    Ok(json!({
        "curves": words,
        "is_filling": rep.is_filling,
        "V": rep.v,
        "E": rep.e,
        "F": rep.f,
        "euler": rep.euler,
        "expected_euler": 2 - 2 * group.genus as i64,
        "connected": rep.connected,
        "face_degrees": rep.face_degrees,
        "witnesses": rep.witnesses,
    }))
}

fn equivariance(ctx: &mut Context) -> Result<Value, TaskError> {
    let samples = ctx.cfg.area_samples;
    let seed = ctx.cfg.seed;
    let map = ctx.map()?;
    let area = area_check(map, samples, seed)?;
    let metrics = json!({
        "equivariance": map.certificate,
        "area": area,
        "displacement_bound": map.displacement_bound,
        "shears": map.shear_info,
    });
    if !map.certificate.passed || !area.passed {
        return Err(TaskError::CheckFailed(metrics.to_string()));
    }
    Ok(metrics)
}

#[derive(Serialize)]
struct HullFile<'a> {
    schema: u32,
    n_iters: usize,
    n_samples: usize,
    seed: u64,
    arc_bound: f64,
    /// Each cloud point is within this distance of a true finite-time
    /// displacement over `n_iters`.
    arc_error: f64,
    dimension: usize,
    origin_margin: f64,
    mean: &'a [f64],
    vertices: Vec<&'a [f64]>,
    support: &'a [rotorbit_core::rotation::SupportSample],
}

fn mz(ctx: &mut Context) -> Result<Value, TaskError> {
    let est = ctx.estimate()?.clone();
    let rank = est.rank();
    let dimension = hull_dimension(&est);
    let origin_margin = est.interior_margin(&vec![0.0; rank]);
    let arc_error = 2.0 * est.arc_bound / est.n_iters as f64;

    let mut header: Vec<String> = (1..=rank).map(|j| format!("x{j}")).collect();
    header.push("hull_vertex".into());
    let mut flags = vec![false; est.cloud.len()];
    for &i in &est.hull_vertices {
        flags[i] = true;
    }
    let rows: Vec<Vec<String>> = est
        .cloud
        .iter()
        .zip(&flags)
        .map(|(p, &f)| {
            let mut r: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            r.push(u8::from(f).to_string());
            r
        })
        .collect();
    ctx.write("mz_cloud.csv", &csv_bytes(&header, &rows)?)?;
    let hull = HullFile {
        schema: REPORT_SCHEMA,
        n_iters: est.n_iters,
        n_samples: est.n_samples,
        seed: est.seed,
        arc_bound: est.arc_bound,
        arc_error,
        dimension,
        origin_margin,
        mean: &est.mean,
        vertices: est.hull_vertices.iter().map(|&i| est.cloud[i].as_slice()).collect(),
        support: &est.support,
    };
    ctx.write_json("hull.json", &hull)?;
    Ok(json!({
        "n_iters": est.n_iters,
        "n_samples": est.n_samples,
        "dimension": dimension,
        "hull_vertices": est.hull_vertices.len(),
        "origin_margin": origin_margin,
        "origin_interior": origin_margin > 0.0,
        "arc_error": arc_error,
        "mean": est.mean,
    }))
}

fn lebesgue(ctx: &mut Context) -> Result<Value, TaskError> {
    let rc = RotationConfig {
        n_samples: ctx.cfg.lebesgue.n_samples,
        n_iters: 1,
        ..ctx.cfg.rotation_config()
    };
    let lv = measure_vector_lebesgue(ctx.map()?, &rc)?;
    let margin = ctx.estimate()?.interior_margin(&lv.vector);
    Ok(json!({
        "vector": lv.vector,
        "standard_error": lv.standard_error,
        "confidence_radius": lv.confidence_radius,
        "samples": lv.samples,
        "hull_margin": margin,
        "inside_beyond_confidence": margin > lv.confidence_radius,
    }))
}

fn deviation(ctx: &mut Context) -> Result<Value, TaskError> {
    let sec = ctx.cfg.deviation.clone();
    let seed = ctx.cfg.seed;
    let est = ctx.estimate()?.clone();
    let rank = est.rank();
    let mut dirs = direction_net(rank, 0);
    dirs.extend(random_directions(rank, sec.random_directions, seed));
    let targets: Vec<SupportTarget> = dirs.iter().map(|u| SupportTarget::from_direction(&est, u)).collect();
    let rc = RotationConfig {
        n_iters: sec.n_iters,
        n_samples: sec.n_samples,
        ..ctx.cfg.rotation_config()
    };
    let reports = deviation_stats(ctx.map()?, &rc, &est, &targets)?;
    let header = vec!["target".to_string(), "n".into(), "running_max".into()];
    let mut rows = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        for &(n, m) in &r.growth {
            rows.push(vec![k.to_string(), n.to_string(), m.to_string()]);
        }
    }
    ctx.write("deviation.csv", &csv_bytes(&header, &rows)?)?;
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "normal": r.normal,
                "omega": r.omega,
                "max_deviation": r.max_deviation,
                "slope": r.slope,
                "slope_limit": r.slope_limit,
                "flagged": r.flagged,
            })
        })
        .collect();
    Ok(json!({
        "n_iters": sec.n_iters,
        "n_samples": sec.n_samples,
        "targets": summary,
        "flagged": reports.iter().filter(|r| r.flagged).count(),
    }))
}

fn realize_task(ctx: &mut Context) -> Result<Value, TaskError> {
    let mut rcfg = ctx.cfg.realize.clone();
    rcfg.candidates.seed ^= ctx.cfg.seed;
    let run = realize(ctx.map()?, &rcfg)?;
    ctx.write_json("certificate.json", &run)?;
    let verified = run.certificate.verify();
    let attempt = match &run.attempt {
        RealizationAttempt::Found(r) => json!({"status": "found", "N": r.n, "residual": r.residual, "tol": rcfg.tol}),
        RealizationAttempt::TooLong { period, word_length } => {
            json!({"status": "too_long", "period": period, "word_length": word_length, "limit": rcfg.max_word_len})
        }
        RealizationAttempt::NotFound { best_residual } => {
            json!({"status": "not_found", "best_residual": best_residual, "tol": rcfg.tol})
        }
    };
    let metrics = json!({
        "data": run.data.len(),
        "v": run.certificate.v.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "certificate_verified": verified,
        "N_product": run.certificate.n_product.to_string(),
        "a_total": run.certificate.a_total.to_string(),
        "attempt": attempt,
        "stream_steps": run.stream_steps,
        "stream_max_deviation": run.stream_max_deviation,
        "stream_c_star": run.stream_c_star,
        "stream_data": run.stream_data,
        "stream_n_product": run.stream_n_product,
    });
    if !verified || run.stream_max_deviation > run.stream_c_star {
        return Err(TaskError::CheckFailed(metrics.to_string()));
    }
    Ok(metrics)
}

fn periodic(ctx: &mut Context) -> Result<Value, TaskError> {
    let sec = ctx.cfg.periodic_point.clone();
    let map = ctx.map()?;
    let mut results = Vec::new();
    let mut missing = Vec::new();
    for w in &sec.words {
        match periodic_point_search(map, w, sec.n_max, sec.tol) {
            Ok(r) => results.push(json!({"word": w.to_string(), "found": true, "N": r.n, "point": r.point, "residual": r.residual, "tol": sec.tol})),
            Err(rotorbit_core::Error::NotFound { n_max, best_residual }) => {
                missing.push(w.to_string());
                results.push(json!({"word": w.to_string(), "found": false, "n_max": n_max, "best_residual": best_residual, "tol": sec.tol}))
            }
            Err(e) => return Err(e.into()),
        }
    }
    let metrics = json!({ "results": results });
    if !missing.is_empty() {
        return Err(TaskError::CheckFailed(format!("no periodic point for {}", missing.join(", "))));
    }
    Ok(metrics)
}

fn torus(ctx: &mut Context) -> Result<Value, TaskError> {
    let sec = &ctx.cfg.torus;
    let rc = RotationConfig {
        n_iters: sec.n_iters,
        n_samples: sec.n_samples,
        seed: ctx.cfg.seed,
        basepoint: Default::default(),
    };
    let est = mz_estimate(&TorusMap { spec: sec.map }, &rc)?;
    let h = hausdorff_to_segment(&est.cloud, sec.segment[0], sec.segment[1]);
    let metrics = json!({
        "n_iters": sec.n_iters,
        "n_samples": sec.n_samples,
        "segment": sec.segment,
        "hausdorff": h,
        "tolerance": sec.tolerance,
    });
    if h > sec.tolerance {
        return Err(TaskError::CheckFailed(metrics.to_string()));
    }
    Ok(metrics)
}

fn run_task(ctx: &mut Context, task: Task) -> Result<Value, TaskError> {
    match task {
        Task::SurfaceCheck => surface_check(ctx),
        Task::FillingCheck => filling(ctx),
        Task::EquivarianceCheck => equivariance(ctx),
        Task::MzEstimate => mz(ctx),
        Task::LebesgueVector => lebesgue(ctx),
        Task::Deviation => deviation(ctx),
        Task::Realize => realize_task(ctx),
        Task::PeriodicPoint => periodic(ctx),
        Task::TorusOracle => torus(ctx),
    }
}

fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let bytes = fs::read(path)?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Runs every requested task in canonical order and writes `report.json`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> std::io::Result<RunReport> {
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut ctx = Context {
        cfg,
        out,
        group: None,
        map: None,
        estimate: None,
        files: Vec::new(),
    };
    let mut tasks = Vec::new();
    for task in cfg.ordered_tasks() {
        let t0 = Instant::now();
        let result = run_task(&mut ctx, task);
        let wall_clock_ms = t0.elapsed().as_millis();
        tasks.push(match result {
            Ok(metrics) => TaskReport {
                task,
                status: "ok",
                wall_clock_ms,
                metrics,
                error: None,
            },
            Err(e) => TaskReport {
                task,
                status: "failed",
                wall_clock_ms,
                metrics: Value::Null,
                error: Some(ErrorInfo {
                    kind: e.kind().into(),
                    message: e.to_string(),
                }),
            },
        });
    }
    let mut files = Vec::new();
    for name in &ctx.files {
        let (sha256, bytes) = sha256_file(&out.join(name))?;
        files.push(FileEntry {
            name: name.clone(),
            sha256,
            bytes,
        });
    }
    let report = RunReport {
        schema: REPORT_SCHEMA,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        config: cfg.clone(),
        tasks,
        files,
        wall_clock_ms: start.elapsed().as_millis(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    fs::write(out.join("report.json"), bytes)?;
    Ok(report)
}

/// Output directory: explicit flag, then `ROTORBIT_OUT`, then the config,
/// then `./rotorbit-out`.
pub fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os("ROTORBIT_OUT").map(PathBuf::from))
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("rotorbit-out"))
}
