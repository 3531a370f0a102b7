//! Python bindings for the bulk-surface polarization simulator.
//!
//! Exposes the main pipeline stages as plain functions and small result
//! classes: mesh generation, the stationary flow solve, the coupled membrane
//! evolution, reaction phase classification, and the dimensionless-group
//! report. Heavy state (meshes, flow fields) stays on the Rust side.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use blebsim::darcy::{self, ForceSpec, ForceTerm};
use blebsim::fem2d::{p2_space, SurfaceSpace};
use blebsim::harness::{self, ExperimentId, RunConfig};
use blebsim::kinetics::{self, KineticsParams as CoreKinetics, Stability};
use blebsim::mesh::{self, DomainSpec as CoreDomain, Mesh2D, SurfaceMesh};
use blebsim::nondim::{self, DimensionlessReport, PhysicalParams};
use blebsim::oracles;
use blebsim::surface_ezrin::{
    self, initial_condition_random, polarization_metrics, SurfaceStepper, TimeSteppingConfig,
};

fn val_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Membrane reaction constants.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct KineticsParams {
    inner: CoreKinetics,
}

#[pymethods]
impl KineticsParams {
    #[new]
    #[pyo3(signature = (c1=50.0, c2=0.1, c3=5.0, alpha=1.0, zeta=2.0))]
    fn new(c1: f64, c2: f64, c3: f64, alpha: f64, zeta: f64) -> PyResult<Self> {
        let inner = CoreKinetics { c1, c2, c3, alpha, zeta };
        inner.validate().map_err(val_err)?;
        Ok(KineticsParams { inner })
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.inner.c1
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2
    }

    #[getter]
    fn c3(&self) -> f64 {
        self.inner.c3
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn zeta(&self) -> f64 {
        self.inner.zeta
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "KineticsParams(c1={}, c2={}, c3={}, alpha={}, zeta={})",
            p.c1, p.c2, p.c3, p.alpha, p.zeta
        )
    }
}

/// Homogeneous steady states of the reaction at a fixed flow speed.
#[pyclass]
struct PhaseReport {
    threshold: f64,
    states: Vec<(f64, String)>,
}

#[pymethods]
impl PhaseReport {
    /// Flow speed above which only the depleted state survives.
    #[getter]
    fn threshold(&self) -> f64 {
        self.threshold
    }

    /// (density, "stable" | "unstable") pairs, ascending in density.
    #[getter]
    fn states(&self) -> Vec<(f64, String)> {
        self.states.clone()
    }

    fn __repr__(&self) -> String {
        format!("PhaseReport(threshold={:.6}, states={:?})", self.threshold, self.states)
    }
}

/// Elliptical cell cross-section with an optional circular nucleus hole.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct DomainSpec {
    inner: CoreDomain,
}

#[pymethods]
impl DomainSpec {
    #[new]
    #[pyo3(signature = (
        semi_major=1.2,
        semi_minor=0.8,
        nucleus_center=(0.2, 0.0),
        nucleus_radius=0.4,
        target_h=0.05,
        gamma_refine=4,
    ))]
    fn new(
        semi_major: f64,
        semi_minor: f64,
        nucleus_center: (f64, f64),
        nucleus_radius: f64,
        target_h: f64,
        gamma_refine: usize,
    ) -> PyResult<Self> {
        let inner = CoreDomain {
            semi_major,
            semi_minor,
            nucleus_center: [nucleus_center.0, nucleus_center.1],
            nucleus_radius,
            target_h,
            gamma_refine,
        };
        inner.validate().map_err(val_err)?;
        Ok(DomainSpec { inner })
    }

    #[getter]
    fn semi_major(&self) -> f64 {
        self.inner.semi_major
    }

    #[getter]
    fn semi_minor(&self) -> f64 {
        self.inner.semi_minor
    }

    #[getter]
    fn nucleus_center(&self) -> (f64, f64) {
        (self.inner.nucleus_center[0], self.inner.nucleus_center[1])
    }

    #[getter]
    fn nucleus_radius(&self) -> f64 {
        self.inner.nucleus_radius
    }

    #[getter]
    fn target_h(&self) -> f64 {
        self.inner.target_h
    }

    #[getter]
    fn gamma_refine(&self) -> usize {
        self.inner.gamma_refine
    }

    fn __repr__(&self) -> String {
        let d = &self.inner;
        format!(
            "DomainSpec(semi_major={}, semi_minor={}, nucleus_center=({}, {}), \
             nucleus_radius={}, target_h={}, gamma_refine={})",
            d.semi_major,
            d.semi_minor,
            d.nucleus_center[0],
            d.nucleus_center[1],
            d.nucleus_radius,
            d.target_h,
            d.gamma_refine
        )
    }
}

/// Triangulated domain plus the refined boundary loop.
#[pyclass]
struct Mesh {
    mesh: Mesh2D,
    surface: SurfaceMesh,
}

#[pymethods]
impl Mesh {
    #[getter]
    fn num_vertices(&self) -> usize {
        self.mesh.vertices.len()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.mesh.triangles.len()
    }

    #[getter]
    fn num_surface_nodes(&self) -> usize {
        self.surface.nodes.len()
    }

    #[getter]
    fn min_angle_deg(&self) -> f64 {
        self.mesh.quality.min_angle_deg
    }

    /// Longest edge over inradius diameter, worst triangle.
    #[getter]
    fn max_aspect(&self) -> f64 {
        self.mesh.quality.max_aspect
    }

    /// Perimeter of the boundary polygon.
    #[getter]
    fn perimeter(&self) -> f64 {
        self.surface.total_length
    }

    /// Writes the triangulation in the plain-text format the CLI reads back.
    fn save(&self, path: &str) -> PyResult<()> {
        mesh::save_mesh(&self.mesh, Path::new(path)).map_err(val_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={}, surface_nodes={}, min_angle_deg={:.1})",
            self.mesh.vertices.len(),
            self.mesh.triangles.len(),
            self.surface.nodes.len(),
            self.mesh.quality.min_angle_deg
        )
    }
}

/// Stationary pressure-driven flow on a mesh.
#[pyclass]
struct FlowSolution {
    mean_speed: f64,
    pressure: Vec<f64>,
    /// Signed tangential speed at the boundary loop nodes, loop order.
    node_speeds: Vec<f64>,
    arclength: Vec<f64>,
}

#[pymethods]
impl FlowSolution {
    /// Area-weighted mean speed over the bulk.
    #[getter]
    fn mean_speed(&self) -> f64 {
        self.mean_speed
    }

    #[getter]
    fn max_boundary_speed(&self) -> f64 {
        self.node_speeds.iter().fold(0.0f64, |m, w| m.max(w.abs()))
    }

    /// Vertex pressures, mean zero over the domain.
    fn pressure(&self) -> Vec<f64> {
        self.pressure.clone()
    }

    /// Signed tangential flow speed at each boundary loop node.
    fn boundary_speeds(&self) -> Vec<f64> {
        self.node_speeds.clone()
    }

    /// Arclength coordinate of each boundary loop node.
    fn boundary_arclength(&self) -> Vec<f64> {
        self.arclength.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "FlowSolution(mean_speed={:.4}, max_boundary_speed={:.4})",
            self.mean_speed,
            self.node_speeds.iter().fold(0.0f64, |m, w| m.max(w.abs()))
        )
    }
}

/// Outcome of one coupled membrane evolution.
#[pyclass]
struct SimulationResult {
    final_mean_u: f64,
    front_mean: f64,
    back_mean: f64,
    depleted_fraction: f64,
    interface_count: usize,
    interface_width: f64,
    steady_state_step: Option<usize>,
    min_u: f64,
    max_u: f64,
    final_time: f64,
    profile_s: Vec<f64>,
    profile_u: Vec<f64>,
    mass_history: Vec<(f64, f64)>,
}

#[pymethods]
impl SimulationResult {
    /// Mean membrane density of the final state.
    #[getter]
    fn final_mean_u(&self) -> f64 {
        self.final_mean_u
    }

    /// Quarter-window mean around the point farthest along the force.
    #[getter]
    fn front_mean(&self) -> f64 {
        self.front_mean
    }

    /// Quarter-window mean around the antipodal point.
    #[getter]
    fn back_mean(&self) -> f64 {
        self.back_mean
    }

    /// Arclength fraction with density below 0.1.
    #[getter]
    fn depleted_fraction(&self) -> f64 {
        self.depleted_fraction
    }

    #[getter]
    fn interface_count(&self) -> usize {
        self.interface_count
    }

    /// Mean arclength of the 10%-90% transition zones.
    #[getter]
    fn interface_width(&self) -> f64 {
        self.interface_width
    }

    /// First step after which the mean-density rate stayed below tolerance
    /// for the configured window; None if never flagged.
    #[getter]
    fn steady_state_step(&self) -> Option<usize> {
        self.steady_state_step
    }

    /// Smallest density over all steps and dofs.
    #[getter]
    fn min_u(&self) -> f64 {
        self.min_u
    }

    /// Largest density over all steps and dofs.
    #[getter]
    fn max_u(&self) -> f64 {
        self.max_u
    }

    #[getter]
    fn final_time(&self) -> f64 {
        self.final_time
    }

    /// (arclength, density) of the final profile at the loop corner nodes.
    fn final_profile(&self) -> (Vec<f64>, Vec<f64>) {
        (self.profile_s.clone(), self.profile_u.clone())
    }

    /// (time, total bound mass) per step.
    fn mass_history(&self) -> Vec<(f64, f64)> {
        self.mass_history.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SimulationResult(final_mean_u={:.4}, back_mean={:.4}, front_mean={:.4}, \
             depleted_fraction={:.4}, interfaces={}, steady_state_step={:?})",
            self.final_mean_u,
            self.back_mean,
            self.front_mean,
            self.depleted_fraction,
            self.interface_count,
            self.steady_state_step
        )
    }
}

/// Dimensionless groups derived from physical parameters.
#[pyclass]
struct Nondim {
    report: DimensionlessReport,
}

#[pymethods]
impl Nondim {
    #[getter]
    fn re(&self) -> f64 {
        self.report.re
    }

    #[getter]
    fn pe(&self) -> f64 {
        self.report.pe
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.report.epsilon
    }

    #[getter]
    fn kappa_over_l2(&self) -> f64 {
        self.report.kappa_over_l2
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.report.c1
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.report.c2
    }

    #[getter]
    fn c3(&self) -> f64 {
        self.report.c3
    }

    #[getter]
    fn t_hat(&self) -> f64 {
        self.report.t_hat
    }

    /// Dimensionless force per unit physical force density (pN/um^3).
    #[getter]
    fn f_hat_scale(&self) -> f64 {
        self.report.f_hat_scale
    }

    #[getter]
    fn inertia_negligible(&self) -> bool {
        self.report.flags.inertia_negligible
    }

    #[getter]
    fn bulk_pool_uniform(&self) -> bool {
        self.report.flags.bulk_pool_uniform
    }

    /// Multi-line human-readable report.
    fn summary(&self) -> String {
        nondim::format_report(&self.report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Nondim(re={:.3e}, pe={:.3}, epsilon={:.4}, c1={:.3}, c2={:.3}, c3={:.3})",
            self.report.re,
            self.report.pe,
            self.report.epsilon,
            self.report.c1,
            self.report.c2,
            self.report.c3
        )
    }
}

/// Triangulates the domain and extracts the refined boundary loop.
#[pyfunction]
#[pyo3(signature = (spec=None))]
fn build_mesh(spec: Option<PyRef<DomainSpec>>) -> PyResult<Mesh> {
    let spec = spec.map(|s| s.inner.clone()).unwrap_or_default();
    let mesh = mesh::generate_mesh(&spec).map_err(val_err)?;
    let surface = mesh::extract_surface(&mesh, &spec).map_err(val_err)?;
    Ok(Mesh { mesh, surface })
}

fn force_from_terms(
    terms: Option<Vec<((f64, f64), (f64, f64), f64)>>,
    kernel_radius: f64,
) -> ForceSpec {
    match terms {
        None => ForceSpec { kernel_radius, ..ForceSpec::default() },
        Some(ts) => ForceSpec {
            terms: ts
                .into_iter()
                .map(|(c, d, m)| ForceTerm {
                    center: [c.0, c.1],
                    direction: [d.0, d.1],
                    magnitude: m,
                })
                .collect(),
            kernel_radius,
        },
    }
}

/// Solves the stationary flow. `terms` is a list of
/// ((center_x, center_y), (dir_x, dir_y), magnitude) force terms; None uses
/// the default single forward push.
#[pyfunction]
#[pyo3(signature = (mesh, terms=None, kernel_radius=0.1))]
fn solve_flow(
    mesh: &Mesh,
    terms: Option<Vec<((f64, f64), (f64, f64), f64)>>,
    kernel_radius: f64,
) -> PyResult<FlowSolution> {
    let force = force_from_terms(terms, kernel_radius);
    let flow = darcy::solve_flow(&mesh.mesh, &mesh.surface, &force).map_err(val_err)?;
    let p2 = p2_space(&mesh.mesh);
    let mean = darcy::mean_speed(&mesh.mesh, &p2, &flow.velocity);
    let n = mesh.surface.nodes.len();
    Ok(FlowSolution {
        mean_speed: mean,
        pressure: flow.pressure,
        node_speeds: flow.boundary_trace[..n].to_vec(),
        arclength: mesh.surface.arclength.clone(),
    })
}

/// Runs the coupled pipeline in memory: mesh, flow, membrane evolution,
/// polarization metrics. Deterministic for a fixed seed.
#[pyfunction]
#[pyo3(signature = (
    domain=None,
    kinetics=None,
    terms=None,
    kernel_radius=0.1,
    final_time=1.0,
    num_steps=1000,
    epsilon=0.002,
    seed=42,
    steady_tol=surface_ezrin::DEFAULT_STEADY_TOL,
    steady_window=20,
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    domain: Option<PyRef<DomainSpec>>,
    kinetics: Option<PyRef<KineticsParams>>,
    terms: Option<Vec<((f64, f64), (f64, f64), f64)>>,
    kernel_radius: f64,
    final_time: f64,
    num_steps: usize,
    epsilon: f64,
    seed: u64,
    steady_tol: f64,
    steady_window: usize,
) -> PyResult<SimulationResult> {
    let spec = domain.map(|s| s.inner.clone()).unwrap_or_default();
    let kin = kinetics.map(|k| k.inner.clone()).unwrap_or_default();
    let force = force_from_terms(terms, kernel_radius);
    let config = TimeSteppingConfig {
        final_time,
        num_steps,
        epsilon,
        // Keep only the initial snapshot; per-step history is in diagnostics.
        snapshot_stride: num_steps.max(1),
        steady_tol,
        steady_window,
        rng_seed: seed,
    };

    let mesh2d = mesh::generate_mesh(&spec).map_err(val_err)?;
    let surface = mesh::extract_surface(&mesh2d, &spec).map_err(val_err)?;
    let space = SurfaceSpace::from_surface(&surface);
    let flow = darcy::solve_flow(&mesh2d, &surface, &force).map_err(val_err)?;

    let force_dir = match force.terms.first() {
        Some(t) => {
            let n = (t.direction[0].powi(2) + t.direction[1].powi(2)).sqrt();
            if n > 0.0 { [t.direction[0] / n, t.direction[1] / n] } else { [1.0, 0.0] }
        }
        None => [1.0, 0.0],
    };

    let initial = initial_condition_random(&space, config.rng_seed);
    let stepper =
        SurfaceStepper::new(space, flow.boundary_trace, kin.clone(), &config).map_err(val_err)?;
    let result = surface_ezrin::run(&stepper, initial, &config).map_err(run_err)?;

    let metrics = polarization_metrics(&stepper.space, &result.final_state.u, force_dir, &kin);
    let min_u = result.diagnostics.iter().fold(f64::INFINITY, |m, r| m.min(r.min_u));
    let max_u = result.diagnostics.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.max_u));
    let n = stepper.space.n_segments;
    Ok(SimulationResult {
        final_mean_u: result.final_state.total_mass / stepper.space.total_length,
        front_mean: metrics.front_mean,
        back_mean: metrics.back_mean,
        depleted_fraction: metrics.depleted_fraction,
        interface_count: metrics.interface_count,
        interface_width: metrics.interface_width,
        steady_state_step: result.steady_state_step,
        min_u,
        max_u,
        final_time: result.final_state.time,
        profile_s: stepper.space.dof_arclength[..n].to_vec(),
        profile_u: result.final_state.u[..n].to_vec(),
        mass_history: result.diagnostics.iter().map(|r| (r.time, r.mass)).collect(),
    })
}

/// Homogeneous steady states of the reaction at flow speed `w`.
#[pyfunction]
#[pyo3(signature = (w, kinetics=None))]
fn classify_phases(w: f64, kinetics: Option<PyRef<KineticsParams>>) -> PyResult<PhaseReport> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(val_err("flow speed must be finite and nonnegative"));
    }
    let kin = kinetics.map(|k| k.inner.clone()).unwrap_or_default();
    kin.validate().map_err(val_err)?;
    let report = kinetics::classify_phases(w, &kin);
    Ok(PhaseReport {
        threshold: report.threshold,
        states: report
            .states
            .iter()
            .map(|s| {
                let label = match s.stability {
                    Stability::Stable => "stable",
                    Stability::Unstable => "unstable",
                };
                (s.u, label.to_string())
            })
            .collect(),
    })
}

/// Dimensionless groups from physical parameters; omitted arguments fall
/// back to the built-in mid-range defaults.
#[pyfunction]
#[pyo3(signature = (
    l_um=None,
    t_pol_s=None,
    rho_g_per_cm3=None,
    dyn_viscosity_pa_s=None,
    c_w_um_per_s=None,
    kappa_tilde_um4_per_pn_s=None,
    nu_um2_per_s=None,
    mu_um2_per_s=None,
    u_max_mol_per_um2=None,
    c_v_mol_per_um3=None,
    gamma_kinetic=None,
    beta1_per_um=None,
    beta2_per_s=None,
    alpha=None,
))]
#[allow(clippy::too_many_arguments)]
fn nondimensionalize(
    l_um: Option<f64>,
    t_pol_s: Option<f64>,
    rho_g_per_cm3: Option<f64>,
    dyn_viscosity_pa_s: Option<f64>,
    c_w_um_per_s: Option<f64>,
    kappa_tilde_um4_per_pn_s: Option<f64>,
    nu_um2_per_s: Option<f64>,
    mu_um2_per_s: Option<f64>,
    u_max_mol_per_um2: Option<f64>,
    c_v_mol_per_um3: Option<f64>,
    gamma_kinetic: Option<f64>,
    beta1_per_um: Option<f64>,
    beta2_per_s: Option<f64>,
    alpha: Option<f64>,
) -> PyResult<Nondim> {
    let d = PhysicalParams::default();
    let p = PhysicalParams {
        l_um: l_um.unwrap_or(d.l_um),
        t_pol_s: t_pol_s.unwrap_or(d.t_pol_s),
        rho_g_per_cm3: rho_g_per_cm3.unwrap_or(d.rho_g_per_cm3),
        dyn_viscosity_pa_s: dyn_viscosity_pa_s.unwrap_or(d.dyn_viscosity_pa_s),
        c_w_um_per_s: c_w_um_per_s.unwrap_or(d.c_w_um_per_s),
        kappa_tilde_um4_per_pn_s: kappa_tilde_um4_per_pn_s.unwrap_or(d.kappa_tilde_um4_per_pn_s),
        nu_um2_per_s: nu_um2_per_s.unwrap_or(d.nu_um2_per_s),
        mu_um2_per_s: mu_um2_per_s.unwrap_or(d.mu_um2_per_s),
        u_max_mol_per_um2: u_max_mol_per_um2.unwrap_or(d.u_max_mol_per_um2),
        c_v_mol_per_um3: c_v_mol_per_um3.unwrap_or(d.c_v_mol_per_um3),
        gamma_kinetic: gamma_kinetic.unwrap_or(d.gamma_kinetic),
        beta1_per_um: beta1_per_um.unwrap_or(d.beta1_per_um),
        beta2_per_s: beta2_per_s.unwrap_or(d.beta2_per_s),
        alpha: alpha.unwrap_or(d.alpha),
    };
    let report = nondim::nondimensionalize(&p).map_err(val_err)?;
    Ok(Nondim { report })
}

/// Runs the closed-form reference self-checks; returns
/// (name, max_residual, tolerance, passed) per check.
#[pyfunction]
fn oracle_checks() -> Vec<(String, f64, f64, bool)> {
    oracles::run_self_checks()
        .into_iter()
        .map(|c| (c.name.to_string(), c.max_residual, c.tolerance, c.passed))
        .collect()
}

/// Codes of the built-in parameter-variation presets.
#[pyfunction]
fn experiment_codes() -> Vec<String> {
    ExperimentId::ALL.iter().map(|id| id.code().to_string()).collect()
}

/// Runs a built-in preset end to end, writing outputs under `out_dir`.
/// Returns (run_directory, manifest_json).
#[pyfunction]
#[pyo3(signature = (code, out_dir, seed=None))]
fn run_preset(code: &str, out_dir: &str, seed: Option<u64>) -> PyResult<(String, String)> {
    let id = ExperimentId::from_code(code)
        .ok_or_else(|| val_err(format!("unknown experiment code {code:?}")))?;
    let mut base = RunConfig { output_dir: PathBuf::from(out_dir), ..RunConfig::default() };
    if let Some(s) = seed {
        base.stepping.rng_seed = s;
    }
    let cfg = harness::experiment_config(id, &base);
    harness::run_experiment(&cfg).map_err(run_err)?;
    let manifest = std::fs::read_to_string(cfg.output_dir.join(harness::MANIFEST_NAME))
        .map_err(run_err)?;
    Ok((cfg.output_dir.to_string_lossy().into_owned(), manifest))
}

#[pymodule]
fn blebsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KineticsParams>()?;
    m.add_class::<PhaseReport>()?;
    m.add_class::<DomainSpec>()?;
    m.add_class::<Mesh>()?;
    m.add_class::<FlowSolution>()?;
    m.add_class::<SimulationResult>()?;
    m.add_class::<Nondim>()?;
    m.add_function(wrap_pyfunction!(build_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(solve_flow, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(classify_phases, m)?)?;
    m.add_function(wrap_pyfunction!(nondimensionalize, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_checks, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_codes, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    Ok(())
}
