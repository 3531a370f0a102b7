//! Command-line front end: mesh generation, flow solves, coupled runs,
//! experiment presets, sweeps, unit conversion, oracle self-checks, and
//! plot regeneration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use blebsim::darcy::{mean_speed, solve_flow, write_flow_vtk, write_trace_csv};
use blebsim::fem2d::p2_space;
use blebsim::harness::{
    exit_code, experiment_config, load_config, replot_run_dir, run_experiment, run_sweep,
    ExperimentId, HarnessError, RunConfig, RunManifest,
};
use blebsim::kinetics::classify_phases;
use blebsim::mesh::{extract_surface, generate_mesh, save_mesh};
use blebsim::nondim::{format_report, nondimensionalize, PhysicalParams};
use blebsim::oracles::run_self_checks;

#[derive(Parser)]
#[command(
    name = "blebsim",
    version,
    about = "Bulk flow and membrane protein kinetics in a model cell"
)]
struct Cli {
    /// Run configuration file, TOML or JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the RNG seed of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the number of time steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the domain mesh and write it with quality statistics.
    Mesh,
    /// Solve the bulk flow and write the field and boundary-trace outputs.
    Flow,
    /// Run the full coupled simulation described by the config.
    Simulate,
    /// Run one of the preset parameter-variation experiments.
    Experiment {
        /// Preset id: 1a, 1b, 2a, 2b, 3a, 3b, 3c, or 4.
        id: String,
    },
    /// Run the simulation once per value of one config parameter.
    Sweep {
        /// Dot path of the parameter, e.g. kinetics.c3 or force.magnitude.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Maximum concurrent runs.
        #[arg(long, default_value_t = 2)]
        jobs: usize,
    },
    /// Convert a physical parameter set into the dimensionless groups.
    Nondim {
        /// Physical parameter file, TOML or JSON; defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Validate the closed-form oracles by finite-difference residuals.
    OracleCheck,
    /// Re-render the SVG figures of a completed run directory.
    Plot {
        /// Directory holding trace.csv, trajectory.csv, and flow.vtk.
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Write the steady-state branches of the reaction law over a speed range.
    Bifurcation {
        /// Largest speed to tabulate.
        #[arg(long, default_value_t = 0.2)]
        w_max: f64,
        /// Number of rows.
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

/// Config file plus global-flag overrides.
fn effective_config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.stepping.rng_seed = seed;
    }
    if let Some(steps) = cli.steps {
        cfg.stepping.num_steps = steps;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn report_run(manifest: &RunManifest, quiet: bool) {
    if quiet {
        return;
    }
    println!("run `{}` finished in {:.1} s", manifest.label, manifest.wall_seconds);
    if let Some(v) = manifest.mean_flow_speed {
        println!("  mean flow speed     {v:.4}");
    }
    if let Some(m) = &manifest.metrics {
        println!("  front / back mean u {:.4} / {:.4}", m.front_mean, m.back_mean);
        println!("  depleted fraction   {:.4}", m.depleted_fraction);
        println!("  interfaces          {}", m.interface_count);
    }
    match manifest.steady_state_step {
        Some(s) => println!("  steady state at step {s}"),
        None => println!("  steady state not reached"),
    }
    for w in &manifest.warnings {
        println!("  warning: {w}");
    }
    println!("  outputs in {}", manifest.config.output_dir.display());
}

fn dispatch(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.cmd {
        Command::Mesh => {
            let cfg = effective_config(cli)?;
            cfg.validate()?;
            let mesh = generate_mesh(&cfg.domain)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("mesh.txt");
            save_mesh(&mesh, &path)?;
            if !cli.quiet {
                println!(
                    "mesh: {} vertices, {} triangles, min angle {:.2} deg, max aspect {:.2}",
                    mesh.vertices.len(),
                    mesh.triangles.len(),
                    mesh.quality.min_angle_deg,
                    mesh.quality.max_aspect
                );
                println!("written to {}", path.display());
            }
            Ok(())
        }
        Command::Flow => {
            let cfg = effective_config(cli)?;
            cfg.validate()?;
            let mesh = generate_mesh(&cfg.domain)?;
            let surface = extract_surface(&mesh, &cfg.domain)?;
            let flow = solve_flow(&mesh, &surface, &cfg.force)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            write_flow_vtk(&mesh, &flow, &cfg.output_dir.join("flow.vtk"))?;
            write_trace_csv(&surface, &flow.boundary_trace, &cfg.output_dir.join("trace.csv"))?;
            if !cli.quiet {
                let p2 = p2_space(&mesh);
                println!(
                    "flow solved: pressure in {} iterations, mean speed {:.4}",
                    flow.diagnostics.pressure.iterations,
                    mean_speed(&mesh, &p2, &flow.velocity)
                );
                println!("outputs in {}", cfg.output_dir.display());
            }
            Ok(())
        }
        Command::Simulate => {
            let cfg = effective_config(cli)?;
            let manifest = run_experiment(&cfg)?;
            report_run(&manifest, cli.quiet);
            Ok(())
        }
        Command::Experiment { id } => {
            let Some(exp) = ExperimentId::from_code(id) else {
                return Err(HarnessError::Config(format!(
                    "unknown experiment `{id}`; expected one of 1a 1b 2a 2b 3a 3b 3c 4"
                )));
            };
            let base = effective_config(cli)?;
            let cfg = experiment_config(exp, &base);
            if !cli.quiet {
                println!("experiment {}: {}", exp.code(), exp.describe());
            }
            let manifest = run_experiment(&cfg)?;
            report_run(&manifest, cli.quiet);
            Ok(())
        }
        Command::Sweep { param, values, jobs } => {
            let base = effective_config(cli)?;
            let manifests = run_sweep(&base, param, values, *jobs)?;
            if !cli.quiet {
                println!("{} runs complete", manifests.len());
                println!("summary in {}", base.output_dir.join("sweep.csv").display());
            }
            Ok(())
        }
        Command::Nondim { params } => {
            let p = match params {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    let is_json = path.extension().is_some_and(|e| e == "json")
                        || (path.extension().is_none() && text.trim_start().starts_with('{'));
                    if is_json {
                        serde_json::from_str::<PhysicalParams>(&text)
                            .map_err(|e| HarnessError::Config(e.to_string()))?
                    } else {
                        toml::from_str::<PhysicalParams>(&text)
                            .map_err(|e| HarnessError::Config(e.to_string()))?
                    }
                }
                None => PhysicalParams::default(),
            };
            let report = nondimensionalize(&p).map_err(|e| HarnessError::Config(e.to_string()))?;
            if !cli.quiet {
                print!("{}", format_report(&report));
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::OracleCheck => {
            let results = run_self_checks();
            let mut failed = 0usize;
            for r in &results {
                if !cli.quiet || !r.passed {
                    println!(
                        "{:<44} residual {:>12.3e}  tolerance {:>9.1e}  {}",
                        r.name,
                        r.max_residual,
                        r.tolerance,
                        if r.passed { "pass" } else { "FAIL" }
                    );
                }
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                return Err(HarnessError::Numeric(format!("{failed} oracle check(s) failed")));
            }
            Ok(())
        }
        Command::Plot { run_dir } => {
            let names = replot_run_dir(run_dir)?;
            if !cli.quiet {
                for n in names {
                    println!("{}", run_dir.join(n).display());
                }
            }
            Ok(())
        }
        Command::Bifurcation { w_max, samples } => {
            let cfg = effective_config(cli)?;
            cfg.validate()?;
            if !(*w_max > 0.0) || *samples < 2 {
                return Err(HarnessError::Config("need w_max > 0 and samples >= 2".into()));
            }
            let mut csv = String::from("w,stable_roots,unstable_roots\n");
            for k in 0..*samples {
                let w = w_max * k as f64 / (*samples - 1) as f64;
                let report = classify_phases(w, &cfg.kinetics);
                let mut stable = Vec::new();
                let mut unstable = Vec::new();
                for s in &report.states {
                    match s.stability {
                        blebsim::kinetics::Stability::Stable => stable.push(format!("{:.9e}", s.u)),
                        blebsim::kinetics::Stability::Unstable => unstable.push(format!("{:.9e}", s.u)),
                    }
                }
                let _ = writeln!(csv, "{w:.9e},{},{}", stable.join(";"), unstable.join(";"));
            }
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("bifurcation.csv");
            std::fs::write(&path, csv)?;
            if !cli.quiet {
                let report = classify_phases(0.0, &cfg.kinetics);
                println!("depletion threshold speed: {:.6}", report.threshold);
                println!("branch table in {}", path.display());
            }
            Ok(())
        }
    }
}
