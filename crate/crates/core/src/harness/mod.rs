//! Run orchestration: configuration files, experiment presets, parameter
//! sweeps, output persistence with checksums, and SVG plot emission.
//!
//! A run is fully determined by one `RunConfig` (and therefore by one config
//! file): mesh generation, the flow solve, and the membrane evolution are all
//! deterministic given the seed, so re-running a config reproduces every CSV
//! byte for byte.

mod plots;

pub use plots::{line_chart, triangle_colormap, Curve};

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::darcy::{
    mean_speed, solve_flow, write_flow_vtk, write_trace_csv, FlowError, FlowField, ForceSpec,
};
use crate::fem2d::{p2_space, SurfaceSpace};
use crate::geometry::{norm, Vec2};
use crate::kinetics::KineticsParams;
use crate::mesh::{extract_surface, generate_mesh, save_mesh, DomainSpec, Mesh2D, MeshError};
use crate::surface_ezrin::{
    initial_condition_random, polarization_metrics, run, write_diagnostics_csv,
    write_trajectory_csv, PolarizationMetrics, RunResult, SurfaceError, SurfaceStepper,
    TimeSteppingConfig,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("manifest check failed: {0}")]
    Manifest(String),
    #[error("{0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Process exit code for an error: 1 for configuration problems, 2 for
/// numerical or io failures at run time.
pub fn exit_code(e: &HarnessError) -> i32 {
    match e {
        HarnessError::Config(_) | HarnessError::Json(_) => 1,
        HarnessError::Mesh(MeshError::InvalidSpec(_)) | HarnessError::Mesh(MeshError::Parse { .. }) => 1,
        HarnessError::Flow(FlowError::ForceTooClose { .. }) | HarnessError::Flow(FlowError::ZeroDirection) => 1,
        HarnessError::Surface(SurfaceError::Config(_)) => 1,
        _ => 2,
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Short name used in output paths and summaries.
    pub label: String,
    pub domain: DomainSpec,
    pub force: ForceSpec,
    pub kinetics: KineticsParams,
    pub stepping: TimeSteppingConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            label: "default".into(),
            domain: DomainSpec::default(),
            force: ForceSpec::default(),
            kinetics: KineticsParams::default(),
            stepping: TimeSteppingConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.label.is_empty() {
            return Err(HarnessError::Config("label must be nonempty".into()));
        }
        self.domain.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.kinetics.validate().map_err(HarnessError::Config)?;
        self.stepping.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.force.kernel_radius > 0.0 && self.force.kernel_radius.is_finite()) {
            return Err(HarnessError::Config(format!(
                "kernel_radius must be positive, got {}",
                self.force.kernel_radius
            )));
        }
        for (i, t) in self.force.terms.iter().enumerate() {
            if norm(t.direction) == 0.0 {
                return Err(HarnessError::Config(format!("force term {i} has zero direction")));
            }
            if !t.magnitude.is_finite() {
                return Err(HarnessError::Config(format!("force term {i} magnitude not finite")));
            }
        }
        Ok(())
    }

    /// Direction of the primary force term, unit length; +x when no force.
    pub fn primary_force_direction(&self) -> Vec2 {
        match self.force.terms.first() {
            Some(t) => crate::geometry::normalize(t.direction),
            None => [1.0, 0.0],
        }
    }
}

/// Loads a config from TOML (default) or JSON (by extension, with a
/// content-based fallback for extensionless files starting with `{`).
pub fn load_config(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path.extension().is_some_and(|e| e == "json")
        || (path.extension().is_none() && text.trim_start().starts_with('{'));
    if is_json {
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Persisted record of a finished (or failed) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub label: String,
    pub code_version: String,
    pub rng_seed: u64,
    pub wall_seconds: f64,
    /// Area of the elliptical domain (ignoring the nucleus hole).
    pub ellipse_area: f64,
    pub mean_flow_speed: Option<f64>,
    /// Mean membrane concentration of the final state.
    pub final_mean_u: Option<f64>,
    pub metrics: Option<PolarizationMetrics>,
    pub steady_state_step: Option<usize>,
    /// Pipeline stage that aborted the run, if any.
    pub failure_stage: Option<String>,
    pub warnings: Vec<String>,
    pub files: Vec<FileRecord>,
    pub config: RunConfig,
}

pub const MANIFEST_NAME: &str = "manifest.json";
/// Relative area deviation from the default ellipse that triggers a warning
/// (shape variants are specified without preserving the default area).
pub const AREA_WARN_REL: f64 = 0.01;

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn record_file(files: &mut Vec<FileRecord>, dir: &Path, name: &str) -> Result<(), HarnessError> {
    let bytes = std::fs::read(dir.join(name))?;
    files.push(FileRecord { name: name.into(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    Ok(())
}

/// Tags the first failing stage on the manifest and passes the result through.
fn stage<T, E: Into<HarnessError>>(
    manifest: &mut RunManifest,
    name: &str,
    r: Result<T, E>,
) -> Result<T, HarnessError> {
    r.map_err(|e| {
        if manifest.failure_stage.is_none() {
            manifest.failure_stage = Some(name.into());
        }
        e.into()
    })
}

/// Runs the full pipeline for one config: mesh, flow, membrane evolution,
/// persistence, plots, manifest. On error the manifest still lands on disk
/// with `failure_stage` set. Deterministic given the config (plots and the
/// wall-clock entry aside, every output byte is reproducible).
pub fn run_experiment(config: &RunConfig) -> Result<RunManifest, HarnessError> {
    let t0 = Instant::now();
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;

    let default_area = {
        let d = DomainSpec::default();
        std::f64::consts::PI * d.semi_major * d.semi_minor
    };
    let area = std::f64::consts::PI * config.domain.semi_major * config.domain.semi_minor;

    let mut manifest = RunManifest {
        label: config.label.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        rng_seed: config.stepping.rng_seed,
        wall_seconds: 0.0,
        ellipse_area: area,
        mean_flow_speed: None,
        final_mean_u: None,
        metrics: None,
        steady_state_step: None,
        failure_stage: None,
        warnings: Vec::new(),
        files: Vec::new(),
        config: config.clone(),
    };
    if (area - default_area).abs() / default_area > AREA_WARN_REL {
        manifest.warnings.push(format!(
            "ellipse area {area:.4} deviates from the default {default_area:.4} by more than {:.0}%",
            AREA_WARN_REL * 100.0
        ));
    }

    let outcome = run_stages(config, &dir, &mut manifest);
    manifest.wall_seconds = t0.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join(MANIFEST_NAME), json)?;
    outcome.map(|()| manifest)
}

fn run_stages(
    config: &RunConfig,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<(), HarnessError> {
    stage(manifest, "config", config.validate())?;

    let mesh = stage(manifest, "mesh", generate_mesh(&config.domain))?;
    let surface = stage(manifest, "mesh", extract_surface(&mesh, &config.domain))?;
    stage(manifest, "persist", save_mesh(&mesh, &dir.join("mesh.txt")))?;

    let flow = stage(manifest, "flow", solve_flow(&mesh, &surface, &config.force))?;
    let p2 = p2_space(&mesh);
    manifest.mean_flow_speed = Some(mean_speed(&mesh, &p2, &flow.velocity));
    stage(manifest, "persist", write_flow_vtk(&mesh, &flow, &dir.join("flow.vtk")))?;
    stage(manifest, "persist", write_trace_csv(&surface, &flow.boundary_trace, &dir.join("trace.csv")))?;

    let space = SurfaceSpace::from_surface(&surface);
    let stepper = stage(
        manifest,
        "surface",
        SurfaceStepper::new(space, flow.boundary_trace.clone(), config.kinetics, &config.stepping),
    )?;
    let initial = initial_condition_random(&stepper.space, config.stepping.rng_seed);
    let result = stage(manifest, "surface", run(&stepper, initial, &config.stepping))?;

    stage(manifest, "persist", write_trajectory_csv(&stepper.space, &result.snapshots, &dir.join("trajectory.csv")))?;
    stage(manifest, "persist", write_diagnostics_csv(&result.diagnostics, &dir.join("diagnostics.csv")))?;

    manifest.final_mean_u = Some(result.final_state.total_mass / stepper.space.total_length);
    manifest.steady_state_step = result.steady_state_step;
    manifest.metrics = Some(polarization_metrics(
        &stepper.space,
        &result.final_state.u,
        config.primary_force_direction(),
        &config.kinetics,
    ));

    let mut produced = vec!["mesh.txt", "flow.vtk", "trace.csv", "trajectory.csv", "diagnostics.csv"];
    // Plot failures never corrupt the simulation outputs recorded above.
    match emit_plots(&stepper.space, &mesh, &flow, &result, dir) {
        Ok(names) => produced.extend(names),
        Err(e) => manifest.warnings.push(format!("plot emission failed: {e}")),
    }
    for name in produced {
        let recorded = record_file(&mut manifest.files, dir, name);
        stage(manifest, "persist", recorded)?;
    }
    Ok(())
}

/// Reads a run directory's manifest and checks every listed file against its
/// recorded checksum and size.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest, HarnessError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    for f in &manifest.files {
        let bytes = std::fs::read(dir.join(&f.name))
            .map_err(|e| HarnessError::Manifest(format!("{}: {e}", f.name)))?;
        if bytes.len() as u64 != f.bytes {
            return Err(HarnessError::Manifest(format!(
                "{}: size {} != recorded {}",
                f.name,
                bytes.len(),
                f.bytes
            )));
        }
        let digest = sha256_hex(&bytes);
        if digest != f.sha256 {
            return Err(HarnessError::Manifest(format!("{}: checksum mismatch", f.name)));
        }
    }
    Ok(manifest)
}

/// The three standard figures of a run: tangential boundary speed along the
/// membrane, membrane concentration profiles over time, and the pressure
/// field colormap. Returns the written file names.
pub fn emit_plots(
    space: &SurfaceSpace,
    mesh: &Mesh2D,
    flow: &FlowField,
    result: &RunResult,
    dir: &Path,
) -> Result<Vec<&'static str>, HarnessError> {
    if result.snapshots.is_empty() {
        return Err(HarnessError::Config("no snapshots to plot".into()));
    }

    let ordered: Vec<usize> = (0..space.n_segments).flat_map(|s| [s, space.n_segments + s]).collect();
    let speed_curve = Curve {
        label: "w.tau".into(),
        color: "#1f77b4".into(),
        points: ordered.iter().map(|&d| (space.dof_arclength[d], flow.boundary_trace[d])).collect(),
    };
    let svg = line_chart("tangential boundary speed", "arclength", "speed", &[speed_curve])?;
    std::fs::write(dir.join("boundary_speed.svg"), svg)?;

    // Up to six profiles evenly spread over the run, first and last included.
    let n_snap = result.snapshots.len();
    let picks: Vec<usize> = if n_snap <= 6 {
        (0..n_snap).collect()
    } else {
        (0..6).map(|k| k * (n_snap - 1) / 5).collect()
    };
    let curves: Vec<Curve> = picks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let snap = &result.snapshots[k];
            let t = i as f64 / (picks.len().max(2) - 1) as f64;
            Curve {
                label: format!("t={:.3}", snap.time),
                color: plots::blend_color((37, 52, 148), (215, 25, 28), t),
                points: ordered
                    .iter()
                    .map(|&d| (space.dof_arclength[d], snap.u[d]))
                    .collect(),
            }
        })
        .collect();
    let svg = line_chart("membrane concentration profiles", "arclength", "u", &curves)?;
    std::fs::write(dir.join("ezrin_profiles.svg"), svg)?;

    let svg = triangle_colormap(&mesh.vertices, &mesh.triangles, &flow.pressure, "pressure")?;
    std::fs::write(dir.join("pressure_field.svg"), svg)?;

    Ok(vec!["boundary_speed.svg", "ezrin_profiles.svg", "pressure_field.svg"])
}

/// Sets one scalar config field addressed by a dot path such as
/// `kinetics.c3` or `force.magnitude` (which covers every force term).
pub fn set_param(cfg: &mut RunConfig, path: &str, value: f64) -> Result<(), HarnessError> {
    match path {
        "kinetics.c1" => cfg.kinetics.c1 = value,
        "kinetics.c2" => cfg.kinetics.c2 = value,
        "kinetics.c3" => cfg.kinetics.c3 = value,
        "kinetics.alpha" => cfg.kinetics.alpha = value,
        "kinetics.zeta" => cfg.kinetics.zeta = value,
        "force.magnitude" => {
            for t in &mut cfg.force.terms {
                t.magnitude = value;
            }
        }
        "force.kernel_radius" => cfg.force.kernel_radius = value,
        "stepping.epsilon" => cfg.stepping.epsilon = value,
        "stepping.final_time" => cfg.stepping.final_time = value,
        "domain.semi_major" => cfg.domain.semi_major = value,
        "domain.semi_minor" => cfg.domain.semi_minor = value,
        "domain.nucleus_radius" => cfg.domain.nucleus_radius = value,
        "domain.target_h" => cfg.domain.target_h = value,
        _ => return Err(HarnessError::Config(format!("unknown parameter path `{path}`"))),
    }
    Ok(())
}

/// One run per value of the addressed parameter; runs are independent, get
/// seeds derived from the base seed, and may execute concurrently. Results
/// are summarized in `sweep.csv` under the base output directory.
pub fn run_sweep(
    base: &RunConfig,
    param_path: &str,
    values: &[f64],
    parallelism: usize,
) -> Result<Vec<RunManifest>, HarnessError> {
    // Path errors surface before any run starts.
    set_param(&mut base.clone(), param_path, 1.0)?;
    std::fs::create_dir_all(&base.output_dir)?;

    let mut slots: Vec<Option<Result<RunManifest, HarnessError>>> = Vec::new();
    slots.resize_with(values.len(), || None);
    let results = Mutex::new(slots);
    let queue: Mutex<VecDeque<(usize, f64)>> =
        Mutex::new(values.iter().copied().enumerate().collect());

    let workers = parallelism.max(1).min(values.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = queue.lock().unwrap().pop_front();
                let Some((i, value)) = job else { break };
                let mut cfg = base.clone();
                let run_result = set_param(&mut cfg, param_path, value).and_then(|()| {
                    cfg.label = format!("{}-{:02}", base.label, i);
                    cfg.output_dir = base.output_dir.join(format!("run_{i:02}"));
                    cfg.stepping.rng_seed = base.stepping.rng_seed.wrapping_add(1 + i as u64);
                    run_experiment(&cfg)
                });
                results.lock().unwrap()[i] = Some(run_result);
            });
        }
    });

    let collected = results.into_inner().unwrap();
    let mut manifests = Vec::with_capacity(values.len());
    for slot in collected {
        manifests.push(slot.expect("worker filled every slot")?);
    }

    let mut csv = String::from(
        "index,value,label,mean_u,front_mean,back_mean,depleted_fraction,interface_count,steady_step\n",
    );
    for (i, m) in manifests.iter().enumerate() {
        let met = m.metrics.as_ref().expect("successful run has metrics");
        let _ = writeln!(
            csv,
            "{},{:.9e},{},{:.9e},{:.9e},{:.9e},{:.9e},{},{}",
            i,
            values[i],
            m.label,
            m.final_mean_u.unwrap_or(f64::NAN),
            met.front_mean,
            met.back_mean,
            met.depleted_fraction,
            met.interface_count,
            m.steady_state_step.map_or(String::from(""), |s| s.to_string()),
        );
    }
    std::fs::write(base.output_dir.join("sweep.csv"), csv)?;
    Ok(manifests)
}

fn bad_file(name: &str, what: &str) -> HarnessError {
    HarnessError::Config(format!("{name}: {what}"))
}

fn parse_trace_csv(text: &str) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut cols = line.split(',');
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            return Err(bad_file("trace.csv", &format!("short row {}", i + 1)));
        };
        let s = a.parse().map_err(|_| bad_file("trace.csv", &format!("bad number row {}", i + 1)))?;
        let v = b.parse().map_err(|_| bad_file("trace.csv", &format!("bad number row {}", i + 1)))?;
        rows.push((s, v));
    }
    if rows.is_empty() {
        return Err(bad_file("trace.csv", "no data rows"));
    }
    Ok(rows)
}

/// Snapshot profiles grouped by step, in file order.
fn parse_trajectory_csv(text: &str) -> Result<Vec<(usize, f64, Vec<(f64, f64)>)>, HarnessError> {
    let mut groups: Vec<(usize, f64, Vec<(f64, f64)>)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad_file("trajectory.csv", &format!("expected 4 columns row {}", i + 1)));
        }
        let step: usize =
            cols[0].parse().map_err(|_| bad_file("trajectory.csv", &format!("bad step row {}", i + 1)))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad_file("trajectory.csv", &format!("bad number row {}", i + 1)))
        };
        let time = parse(cols[1])?;
        let point = (parse(cols[2])?, parse(cols[3])?);
        match groups.last_mut() {
            Some(g) if g.0 == step => g.2.push(point),
            _ => groups.push((step, time, vec![point])),
        }
    }
    if groups.is_empty() {
        return Err(bad_file("trajectory.csv", "no data rows"));
    }
    Ok(groups)
}

/// Reads back the legacy ASCII flow dump: vertices, triangles, and the
/// vertex pressure field.
fn parse_flow_vtk(text: &str) -> Result<(Vec<Vec2>, Vec<[usize; 3]>, Vec<f64>), HarnessError> {
    let mut tokens = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| l.split_whitespace());
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut pressure = Vec::new();
    let err = |what: &str| bad_file("flow.vtk", what);
    while let Some(tok) = tokens.next() {
        match tok {
            "POINTS" => {
                let n: usize = tokens.next().ok_or_else(|| err("missing count"))?.parse().map_err(|_| err("bad count"))?;
                tokens.next(); // value type
                for _ in 0..n {
                    let x: f64 = tokens.next().ok_or_else(|| err("truncated points"))?.parse().map_err(|_| err("bad point"))?;
                    let y: f64 = tokens.next().ok_or_else(|| err("truncated points"))?.parse().map_err(|_| err("bad point"))?;
                    tokens.next(); // z
                    vertices.push([x, y]);
                }
            }
            "CELLS" => {
                let m: usize = tokens.next().ok_or_else(|| err("missing count"))?.parse().map_err(|_| err("bad count"))?;
                tokens.next(); // total entry count
                for _ in 0..m {
                    let k: usize = tokens.next().ok_or_else(|| err("truncated cells"))?.parse().map_err(|_| err("bad cell"))?;
                    if k != 3 {
                        return Err(err("non-triangle cell"));
                    }
                    let mut tri = [0usize; 3];
                    for slot in &mut tri {
                        *slot = tokens.next().ok_or_else(|| err("truncated cells"))?.parse().map_err(|_| err("bad cell index"))?;
                    }
                    triangles.push(tri);
                }
            }
            "SCALARS" => {
                if tokens.next() == Some("pressure") {
                    tokens.next(); // value type
                    tokens.next(); // components
                    tokens.next(); // LOOKUP_TABLE
                    tokens.next(); // table name
                    for _ in 0..vertices.len() {
                        let p: f64 = tokens.next().ok_or_else(|| err("truncated scalars"))?.parse().map_err(|_| err("bad scalar"))?;
                        pressure.push(p);
                    }
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() || triangles.is_empty() || pressure.len() != vertices.len() {
        return Err(err("incomplete dataset"));
    }
    Ok((vertices, triangles, pressure))
}

/// Re-renders the three standard figures from a completed run directory,
/// using only the persisted outputs.
pub fn replot_run_dir(dir: &Path) -> Result<Vec<&'static str>, HarnessError> {
    let trace = parse_trace_csv(&std::fs::read_to_string(dir.join("trace.csv"))?)?;
    let curve = Curve { label: "w.tau".into(), color: "#1f77b4".into(), points: trace };
    let svg = line_chart("tangential boundary speed", "arclength", "speed", &[curve])?;
    std::fs::write(dir.join("boundary_speed.svg"), svg)?;

    let groups = parse_trajectory_csv(&std::fs::read_to_string(dir.join("trajectory.csv"))?)?;
    let picks: Vec<usize> = if groups.len() <= 6 {
        (0..groups.len()).collect()
    } else {
        (0..6).map(|k| k * (groups.len() - 1) / 5).collect()
    };
    let curves: Vec<Curve> = picks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (_, time, points) = &groups[k];
            Curve {
                label: format!("t={time:.3}"),
                color: plots::blend_color((37, 52, 148), (215, 25, 28), i as f64 / (picks.len().max(2) - 1) as f64),
                points: points.clone(),
            }
        })
        .collect();
    let svg = line_chart("membrane concentration profiles", "arclength", "u", &curves)?;
    std::fs::write(dir.join("ezrin_profiles.svg"), svg)?;

    let (vertices, triangles, pressure) =
        parse_flow_vtk(&std::fs::read_to_string(dir.join("flow.vtk"))?)?;
    let svg = triangle_colormap(&vertices, &triangles, &pressure, "pressure")?;
    std::fs::write(dir.join("pressure_field.svg"), svg)?;

    Ok(vec!["boundary_speed.svg", "ezrin_profiles.svg", "pressure_field.svg"])
}

/// The eight parameter-variation studies. Identifiers mirror the CLI codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    /// 1a: adsorption strength times 5.
    AdsorptionUp,
    /// 1b: adsorption strength times 0.1.
    AdsorptionDown,
    /// 2a: force magnitude times 5.
    ForceUp,
    /// 2b: force magnitude times 0.1.
    ForceDown,
    /// 3a: elongated thin cell, same nominal proportions for the nucleus.
    ElongatedCell,
    /// 3b: nucleus shifted sideways.
    NucleusSideShift,
    /// 3c: nucleus shifted toward the front.
    NucleusFrontShift,
    /// 4: second mirrored force at the back drives a counter-flow.
    CounterFlow,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::AdsorptionUp,
        ExperimentId::AdsorptionDown,
        ExperimentId::ForceUp,
        ExperimentId::ForceDown,
        ExperimentId::ElongatedCell,
        ExperimentId::NucleusSideShift,
        ExperimentId::NucleusFrontShift,
        ExperimentId::CounterFlow,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ExperimentId::AdsorptionUp => "1a",
            ExperimentId::AdsorptionDown => "1b",
            ExperimentId::ForceUp => "2a",
            ExperimentId::ForceDown => "2b",
            ExperimentId::ElongatedCell => "3a",
            ExperimentId::NucleusSideShift => "3b",
            ExperimentId::NucleusFrontShift => "3c",
            ExperimentId::CounterFlow => "4",
        }
    }

    pub fn from_code(s: &str) -> Option<ExperimentId> {
        ExperimentId::ALL.into_iter().find(|id| id.code() == s)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentId::AdsorptionUp => "adsorption strength x5",
            ExperimentId::AdsorptionDown => "adsorption strength x0.1",
            ExperimentId::ForceUp => "force magnitude x5",
            ExperimentId::ForceDown => "force magnitude x0.1",
            ExperimentId::ElongatedCell => "elongated thin cell",
            ExperimentId::NucleusSideShift => "nucleus shifted sideways",
            ExperimentId::NucleusFrontShift => "nucleus shifted frontward",
            ExperimentId::CounterFlow => "opposing force pair",
        }
    }
}

/// Derives the preset config of one experiment from a base config.
///
/// Geometry presets also move the force where needed: the force kernel must
/// keep two support radii of clearance from both boundary loops, which the
/// default placement cannot satisfy in the thin cell of 3a or ahead of the
/// front-shifted nucleus of 3c.
pub fn experiment_config(id: ExperimentId, base: &RunConfig) -> RunConfig {
    let mut cfg = base.clone();
    cfg.label = id.code().to_string();
    cfg.output_dir = base.output_dir.join(format!("experiment_{}", id.code()));
    match id {
        ExperimentId::AdsorptionUp => cfg.kinetics.c3 *= 5.0,
        ExperimentId::AdsorptionDown => cfg.kinetics.c3 *= 0.1,
        ExperimentId::ForceUp => {
            for t in &mut cfg.force.terms {
                t.magnitude *= 5.0;
            }
        }
        ExperimentId::ForceDown => {
            for t in &mut cfg.force.terms {
                t.magnitude *= 0.1;
            }
        }
        ExperimentId::ElongatedCell => {
            // Axes 1.8 and 5/18; the stated shape does not preserve the
            // default area, which run_experiment surfaces as a warning.
            let major_ratio = 1.8 / cfg.domain.semi_major;
            let minor_ratio = (5.0 / 18.0) / cfg.domain.semi_minor;
            cfg.domain.semi_major = 1.8;
            cfg.domain.semi_minor = 5.0 / 18.0;
            cfg.domain.nucleus_center = [cfg.domain.nucleus_center[0] * major_ratio, 0.0];
            cfg.domain.nucleus_radius *= minor_ratio;
            for t in &mut cfg.force.terms {
                t.center = [t.center[0] * major_ratio, 0.0];
            }
            cfg.force.kernel_radius = 0.08;
        }
        ExperimentId::NucleusSideShift => cfg.domain.nucleus_center = [0.2, 0.25],
        ExperimentId::NucleusFrontShift => {
            cfg.domain.nucleus_center = [0.45, 0.0];
            // Midpoint of the gap between nucleus edge and cell front.
            for t in &mut cfg.force.terms {
                t.center = [1.025, 0.0];
            }
            cfg.force.kernel_radius = 0.08;
        }
        ExperimentId::CounterFlow => {
            let mut mirrored: Vec<_> = cfg
                .force
                .terms
                .iter()
                .map(|t| {
                    let mut m = t.clone();
                    m.center = [-t.center[0], t.center[1]];
                    m.direction = [-t.direction[0], t.direction[1]];
                    m
                })
                .collect();
            cfg.force.terms.append(&mut mirrored);
        }
    }
    cfg
}

#[cfg(test)]
mod tests;
