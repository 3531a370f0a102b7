use super::*;
use crate::surface_ezrin::{EzrinState, RunResult};

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("blebsim_{}_{}", std::process::id(), name));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Coarse, short run that still exercises every pipeline stage.
fn tiny_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.domain.target_h = 0.12;
    cfg.domain.gamma_refine = 2;
    cfg.stepping.num_steps = 40;
    cfg.stepping.final_time = 0.04;
    cfg.stepping.snapshot_stride = 10;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn config_files_round_trip_in_both_formats() {
    let cfg = RunConfig::default();
    let dir = tmp_dir("config_round_trip");

    let toml_path = dir.join("run.toml");
    std::fs::write(&toml_path, toml::to_string(&cfg).unwrap()).unwrap();
    let from_toml = load_config(&toml_path).unwrap();
    assert_eq!(from_toml.label, cfg.label);
    assert_eq!(from_toml.kinetics.c3, cfg.kinetics.c3);
    assert_eq!(from_toml.domain.target_h, cfg.domain.target_h);

    let json_path = dir.join("run.json");
    std::fs::write(&json_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let from_json = load_config(&json_path).unwrap();
    assert_eq!(from_json.stepping.num_steps, cfg.stepping.num_steps);

    // Extensionless JSON is detected by content.
    let bare = dir.join("run");
    std::fs::write(&bare, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert!(load_config(&bare).is_ok());

    // Typos in field names are configuration errors, not silent defaults.
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "labell = \"x\"\n").unwrap();
    match load_config(&bad) {
        Err(e) => assert_eq!(exit_code(&e), 1),
        Ok(_) => panic!("unknown field accepted"),
    }
}

#[test]
fn parameter_paths_set_fields_and_reject_unknowns() {
    let mut cfg = RunConfig::default();
    set_param(&mut cfg, "kinetics.c3", 25.0).unwrap();
    assert_eq!(cfg.kinetics.c3, 25.0);
    set_param(&mut cfg, "force.magnitude", 2.0).unwrap();
    assert!(cfg.force.terms.iter().all(|t| t.magnitude == 2.0));
    set_param(&mut cfg, "domain.semi_minor", 0.5).unwrap();
    assert_eq!(cfg.domain.semi_minor, 0.5);

    let err = set_param(&mut cfg, "kinetics.c9", 1.0).unwrap_err();
    assert_eq!(exit_code(&err), 1);
    assert!(set_param(&mut cfg, "domain", 1.0).is_err());
}

#[test]
fn experiment_presets_modify_the_intended_knobs() {
    let base = RunConfig::default();
    for id in ExperimentId::ALL {
        let cfg = experiment_config(id, &base);
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", id.code()));
        assert_eq!(cfg.label, id.code());
        assert!(ExperimentId::from_code(id.code()) == Some(id));
    }

    let up = experiment_config(ExperimentId::AdsorptionUp, &base);
    assert_eq!(up.kinetics.c3, base.kinetics.c3 * 5.0);
    let down = experiment_config(ExperimentId::AdsorptionDown, &base);
    assert!((down.kinetics.c3 - base.kinetics.c3 * 0.1).abs() < 1e-12);

    let strong = experiment_config(ExperimentId::ForceUp, &base);
    assert_eq!(strong.force.terms[0].magnitude, base.force.terms[0].magnitude * 5.0);

    let thin = experiment_config(ExperimentId::ElongatedCell, &base);
    assert_eq!(thin.domain.semi_major, 1.8);
    assert!((thin.domain.semi_minor - 5.0 / 18.0).abs() < 1e-12);
    // Nucleus must still fit inside the thin cell.
    assert!(thin.domain.nucleus_center[0].abs() + thin.domain.nucleus_radius < thin.domain.semi_major);
    assert!(thin.domain.nucleus_radius < thin.domain.semi_minor);

    let counter = experiment_config(ExperimentId::CounterFlow, &base);
    assert_eq!(counter.force.terms.len(), 2 * base.force.terms.len());
    let (a, b) = (&counter.force.terms[0], &counter.force.terms[1]);
    assert_eq!(b.center[0], -a.center[0]);
    assert_eq!(b.direction[0], -a.direction[0]);
    assert_eq!(b.magnitude, a.magnitude);

    assert!(ExperimentId::from_code("5x").is_none());
}

#[test]
fn run_experiment_persists_outputs_with_valid_manifest() {
    let dir = tmp_dir("run_outputs");
    let cfg = tiny_config(&dir);
    let manifest = run_experiment(&cfg).unwrap();

    assert!(manifest.failure_stage.is_none());
    assert!(manifest.metrics.is_some());
    assert!(manifest.mean_flow_speed.unwrap() > 0.0);
    assert!(manifest.warnings.is_empty(), "{:?}", manifest.warnings);
    for name in ["mesh.txt", "flow.vtk", "trace.csv", "trajectory.csv", "diagnostics.csv"] {
        assert!(manifest.files.iter().any(|f| f.name == name), "missing {name}");
    }
    for name in ["boundary_speed.svg", "ezrin_profiles.svg", "pressure_field.svg"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(text.starts_with("<svg "), "{name} is not svg");
        assert!(text.trim_end().ends_with("</svg>"), "{name} is truncated");
    }

    let verified = verify_manifest(&dir).unwrap();
    assert_eq!(verified.files.len(), manifest.files.len());

    // The figures are reproducible from the persisted outputs alone.
    for name in ["boundary_speed.svg", "ezrin_profiles.svg", "pressure_field.svg"] {
        std::fs::remove_file(dir.join(name)).unwrap();
    }
    let replotted = replot_run_dir(&dir).unwrap();
    assert_eq!(replotted.len(), 3);
    for name in replotted {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(text.starts_with("<svg ") && text.trim_end().ends_with("</svg>"));
    }

    // Tampering with a listed file must be detected.
    let target = dir.join("trace.csv");
    let mut bytes = std::fs::read(&target).unwrap();
    bytes[10] ^= 1;
    std::fs::write(&target, bytes).unwrap();
    match verify_manifest(&dir) {
        Err(HarnessError::Manifest(_)) => {}
        other => panic!("tamper not detected: {other:?}"),
    }
}

#[test]
fn identical_configs_reproduce_csv_outputs_bitwise() {
    let dir_a = tmp_dir("repro_a");
    let dir_b = tmp_dir("repro_b");
    run_experiment(&tiny_config(&dir_a)).unwrap();
    run_experiment(&tiny_config(&dir_b)).unwrap();
    for name in ["trace.csv", "trajectory.csv", "diagnostics.csv"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert!(a == b, "{name} differs between identical runs");
    }
}

#[test]
fn failures_record_their_stage_in_the_manifest() {
    // Force support overlapping the outer boundary: rejected by the flow stage.
    let dir = tmp_dir("fail_flow");
    let mut cfg = tiny_config(&dir);
    cfg.force.terms[0].center = [1.15, 0.0];
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(exit_code(&err), 1);
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap();
    let manifest: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest.failure_stage.as_deref(), Some("flow"));

    // Invalid kinetics never reach the mesh stage.
    let dir = tmp_dir("fail_config");
    let mut cfg = tiny_config(&dir);
    cfg.kinetics.c3 = -1.0;
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(exit_code(&err), 1);
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap();
    let manifest: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest.failure_stage.as_deref(), Some("config"));
    assert!(manifest.files.is_empty());
}

#[test]
fn sweep_collects_ordered_manifests_and_summary() {
    let dir = tmp_dir("sweep");
    let base = tiny_config(&dir);
    let manifests = run_sweep(&base, "kinetics.c3", &[0.5, 5.0], 2).unwrap();
    assert_eq!(manifests.len(), 2);
    assert_eq!(manifests[0].config.kinetics.c3, 0.5);
    assert_eq!(manifests[1].config.kinetics.c3, 5.0);
    // Derived seeds differ from each other and from the base.
    assert_ne!(manifests[0].rng_seed, manifests[1].rng_seed);
    assert_ne!(manifests[0].rng_seed, base.stepping.rng_seed);

    let summary = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("index,value,label"));
    assert!(lines[1].starts_with("0,5.000000000e-1"));

    assert!(run_sweep(&base, "kinetics.c3", &[], 4).unwrap().is_empty());
    let err = run_sweep(&base, "not.a.path", &[1.0], 1).unwrap_err();
    assert_eq!(exit_code(&err), 1);
}

#[test]
fn plots_handle_empty_and_constant_data() {
    assert!(line_chart("t", "x", "y", &[]).is_err());

    let flat = Curve {
        label: "flat".into(),
        color: "#000000".into(),
        points: (0..20).map(|i| (i as f64, 0.4)).collect(),
    };
    let svg = line_chart("t", "x", "y", &[flat]).unwrap();
    let line = svg.lines().find(|l| l.contains("class=\"profile\"")).unwrap();
    let points = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<&str> = points.split_whitespace().map(|p| p.split(',').nth(1).unwrap()).collect();
    assert!(ys.len() == 20 && ys.iter().all(|&y| y == ys[0]), "flat data must plot flat");

    // A degenerate manifest-level call: no snapshots is an error.
    let dir = tmp_dir("plots_empty");
    let cfg = tiny_config(&dir);
    let mesh = generate_mesh(&cfg.domain).unwrap();
    let surface = extract_surface(&mesh, &cfg.domain).unwrap();
    let flow = solve_flow(&mesh, &surface, &cfg.force).unwrap();
    let space = SurfaceSpace::from_surface(&surface);
    let empty = RunResult {
        final_state: EzrinState {
            u: vec![0.0; space.n_dofs],
            time: 0.0,
            step: 0,
            total_mass: 0.0,
            min_u: 0.0,
            max_u: 0.0,
        },
        snapshots: vec![],
        diagnostics: vec![],
        steady_state_step: None,
    };
    assert!(emit_plots(&space, &mesh, &flow, &empty, &dir).is_err());

    assert!(triangle_colormap(&mesh.vertices, &mesh.triangles, &flow.pressure, "p").is_ok());
    assert!(triangle_colormap(&mesh.vertices, &[], &flow.pressure, "p").is_err());
    assert!(triangle_colormap(&mesh.vertices, &mesh.triangles, &[0.0], "p").is_err());
}

#[test]
fn shape_variant_gets_an_area_warning() {
    let dir = tmp_dir("area_warning");
    let mut cfg = experiment_config(ExperimentId::ElongatedCell, &tiny_config(&dir));
    // Coarse lattices cannot resolve the thin cell within the quality gate.
    cfg.domain.target_h = 0.05;
    // Keep the run minimal; only the bookkeeping is under test.
    cfg.stepping.num_steps = 5;
    cfg.stepping.final_time = 0.005;
    cfg.stepping.snapshot_stride = 5;
    let manifest = run_experiment(&cfg).unwrap();
    assert!((manifest.ellipse_area - std::f64::consts::PI * 1.8 * 5.0 / 18.0).abs() < 1e-12);
    assert!(
        manifest.warnings.iter().any(|w| w.contains("area")),
        "no area warning: {:?}",
        manifest.warnings
    );
}
