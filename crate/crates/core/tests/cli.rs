use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sgs_core::cli::output_checksums;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgs")).args(args).env_remove("SGS_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Nothing but the given entries in `dir` (no leftover staging directories).
fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

const DROPLET: &str = r#"
experiment = "droplet"
output_dir = "unused"
droplet.f0 = 2.0
droplet.v = 1.0
droplet.m_a = 1.0
droplet.m_b = 1.0
droplet.l_a = 0.5
droplet.l_b = 0.5
droplet.r_max = 3.0
droplet.sweep_angles = 3
droplet.periods = 2.0
"#;

const SMALL_GROUND_STATE: &str = r#"
experiment = "ground-state"
output_dir = "unused"
grid.n_per_axis = 16
grid.box_length = 16.0
kernel.kind = "coulomb"
kernel.coupling = 1.0
ground_state.norm = 4.0
"#;

#[test]
fn ground_state_run_at_64() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("gs");
    let cfg = configs().join("ground_state.toml");
    let out = sgs(&["run", cfg.to_str().unwrap(), "--output", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), out_dir.to_str().unwrap());

    let gs = json(&out_dir.join("ground_state.json"));
    assert!(gs["total_energy"].as_f64().unwrap() < 0.0);
    assert!(gs["residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(gs["n_per_axis"].as_u64(), Some(64));

    let manifest = json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["experiment"], "ground-state");
    assert_eq!(manifest["config"]["grid"]["n_per_axis"], 64);
    assert!(manifest["timings_seconds"]["total"].as_f64().unwrap() > 0.0);
    let files: Vec<String> = output_checksums(&out_dir).unwrap().into_iter().map(|(f, _)| f).collect();
    assert_eq!(files, ["ground_state.json", "energy_trace.csv", "profile.sgs"]);
}

#[test]
fn droplet_zone_table_starts_at_the_first_force_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "d.toml", DROPLET);
    let out_dir = tmp.path().join("run");
    let out = sgs(&["run", cfg.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let zones = json(&out_dir.join("zones.json"));
    let u = zones["boundaries_k0r"][0].as_f64().unwrap();
    assert!((u.tan() + 1.0 / u).abs() < 1e-8);
    assert!(u > std::f64::consts::FRAC_PI_2 && u < std::f64::consts::PI);
    assert_eq!(zones["zones"][0]["kind"], "attractive");
    assert_eq!(zones["zones"][1]["kind"], "repulsive");
    for name in ["orbits.json", "sweep.csv", "sweep.json", "manifest.json"] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
}

#[test]
fn unknown_key_is_a_config_error_with_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &format!("{SMALL_GROUND_STATE}grid.spacing = 0.5\n"));
    let out_dir = tmp.path().join("never");
    let out = sgs(&["run", cfg.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("spacing"), "{}", stderr(&out));
    assert!(!out_dir.exists());
    assert_eq!(entries(tmp.path()), ["bad.toml"]);

    let out = sgs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_echoes_resolved_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "d.toml", DROPLET);
    let out = sgs(&["validate", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let (first, rest) = text.split_once('\n').unwrap();
    assert_eq!(first, "ok");
    let resolved: serde_json::Value = serde_json::from_str(rest).unwrap();
    assert_eq!(resolved["droplet"]["energy_factor"], 1.3);
    assert_eq!(resolved["droplet"]["sweep_angles"], 3);
    assert_eq!(entries(tmp.path()), ["d.toml"]);

    for name in ["ground_state.toml", "soliton_stability.toml", "dbb_ensemble.toml", "gravity_single.toml", "gravity_pair.toml", "droplet.toml"] {
        let out = sgs(&["validate", configs().join(name).to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", stderr(&out));
    }
}

#[test]
fn validate_names_the_offending_key() {
    let tmp = tempfile::tempdir().unwrap();
    // spacing 0.5, so dt must stay below 0.25
    let evolve = r#"
experiment = "evolve"
output_dir = "unused"
grid.n_per_axis = 16
grid.box_length = 8.0
kernel.kind = "coulomb"
kernel.coupling = 1.0
evolution.initial = "gaussian"
evolution.gaussian_width = 1.0
evolution.dt = 0.25
evolution.t_end = 1.0
evolution.snapshot_stride = 1
"#;
    let cfg = write(tmp.path(), "e.toml", evolve);
    let out = sgs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("evolution.dt"), "{}", stderr(&out));

    let overlap = r#"
experiment = "effective-gravity"
output_dir = "unused"
grid.n_per_axis = 32
grid.box_length = 16.0
gravity.positions = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
gravity.l_values = [1.0, 1.0]
"#;
    let cfg = write(tmp.path(), "g.toml", overlap);
    let out = sgs(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("SourceOverlap"), "{}", stderr(&out));
    assert!(stderr(&out).contains("gravity.positions"), "{}", stderr(&out));

    let missing = sgs(&["validate", tmp.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_and_leaves_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "gs.toml", &format!("{SMALL_GROUND_STATE}solver.max_iterations = 3\n"));
    let out_dir = tmp.path().join("run");
    let out = sgs(&["run", cfg.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_eq!(entries(tmp.path()), ["gs.toml"]);
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "gs.toml", SMALL_GROUND_STATE);
    let blocker = write(tmp.path(), "file", "");
    let out = sgs(&["run", cfg.to_str().unwrap(), "-o", blocker.join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert_eq!(entries(tmp.path()), ["file", "gs.toml"]);
}

#[test]
fn existing_output_is_not_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "gs.toml", SMALL_GROUND_STATE);
    let out_dir = tmp.path().join("run");
    std::fs::create_dir(&out_dir).unwrap();
    write(&out_dir, "keep.txt", "mine");
    let out = sgs(&["run", cfg.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(entries(&out_dir), ["keep.txt"]);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "gs.toml", SMALL_GROUND_STATE);
    let dirs: Vec<PathBuf> = ["a", "b"].iter().map(|n| tmp.path().join(n)).collect();
    for d in &dirs {
        assert!(sgs(&["run", cfg.to_str().unwrap(), "-o", d.to_str().unwrap()]).status.success());
    }
    let (a, b) = (output_checksums(&dirs[0]).unwrap(), output_checksums(&dirs[1]).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    for (file, _) in &a {
        assert_eq!(std::fs::read(dirs[0].join(file)).unwrap(), std::fs::read(dirs[1].join(file)).unwrap());
    }
}

#[test]
fn thread_override_and_version() {
    let out = sgs(&["version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("sgs "));

    let bad = Command::new(env!("CARGO_BIN_EXE_sgs")).arg("version").env("SGS_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("SGS_THREADS"));

    assert_eq!(sgs(&["frobnicate"]).status.code(), Some(2));
}
