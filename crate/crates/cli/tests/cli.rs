use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Copy a shipped config directory into a scratch dir, replacing the
/// project file with `project`.
fn workspace(name: &str, project: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(repo_configs().join(name)).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    fs::write(dir.path().join("project.toml"), project).unwrap();
    dir
}

fn netsynth(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netsynth"))
        .args(args)
        .current_dir(dir)
        .env("NETSYNTH_WORKERS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const HEATING: &str = r#"
plant = "plant.toml"
spec = "spec.toml"
theta = "0.5"
[falsifier]
samples = 2000
[refine]
enabled = true
[simulation]
samples = 20
"#;

#[test]
fn heating_check_prints_planning_values() {
    let dir = workspace("heating", HEATING);
    let o = netsynth(dir.path(), &["check", "project.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("contraction A = 0.955"), "{out}");
    assert!(out.contains("quantization bound at mu = 0.5: 0.0225"), "{out}");
    assert!(out.contains("eta = 0.01"), "{out}");
}

#[test]
fn example2_is_falsified() {
    let dir = workspace("example2", &fs::read_to_string(repo_configs().join("example2/project.toml")).unwrap());
    let o = netsynth(dir.path(), &["check", "project.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("certificate falsified"));
    let o = netsynth(dir.path(), &["synthesize", "project.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn explicit_eta_over_bound_is_config_error() {
    let dir = workspace("heating", &format!("mu = \"0.5\"\neta = \"0.05\"\n{HEATING}"));
    let o = netsynth(dir.path(), &["check", "project.toml"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("exceeds the quantization bound"), "{}", stderr(&o));
}

#[test]
fn printed_eta_fails_grid_containment() {
    let dir = workspace("heating", &format!("mu = \"0.5\"\neta = \"0.0225\"\n{HEATING}"));
    let o = netsynth(dir.path(), &["check", "project.toml"]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr(&o);
    assert!(err.contains("18.25, 18.5, 19, 19.5, 20"), "{err}");
    assert!(err.contains("0.01, 0.005, 0.0025"), "{err}");
}

#[test]
fn unrefined_inputs_are_unenforceable() {
    let dir = workspace("heating", &HEATING.replace("enabled = true", "enabled = false"));
    let o = netsynth(dir.path(), &["synthesize", "project.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("unenforceable"));
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/diagnostics.json")).unwrap()).unwrap();
    assert!(!diag["entries"].as_array().unwrap().is_empty());
}

#[test]
fn synthesize_then_simulate() {
    let dir = workspace("heating", HEATING);
    let o = netsynth(dir.path(), &["synthesize", "project.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("X0 = [18.5, 19.5] x [17.5, 18.5] x [17.5, 18.5] x [17.5, 18.5]"), "{out}");
    let o = netsynth(dir.path(), &["simulate", "project.toml", "--preset", "corner"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("all pass: true"));
    let csv = fs::read_to_string(dir.path().join("out/trace_dec.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0,19.500000,18.500000,17.500000,18.500000,"), "{csv}");
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn tampered_controller_blocks() {
    let dir = workspace("heating", HEATING);
    assert_eq!(netsynth(dir.path(), &["synthesize", "project.toml", "--mode", "dec"]).status.code(), Some(0));
    let path = dir.path().join("out/dec_controllers.json");
    let mut ctrl: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    ctrl["inputs"][3][1] = serde_json::json!([]);
    fs::write(&path, serde_json::to_string(&ctrl).unwrap()).unwrap();
    let o = netsynth(dir.path(), &["simulate", "project.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("step 3: component 1"), "{err}");
}

#[test]
fn runs_are_byte_reproducible() {
    let a = workspace("heating", HEATING);
    let b = workspace("heating", HEATING);
    for d in [&a, &b] {
        assert_eq!(netsynth(d.path(), &["synthesize", "project.toml"]).status.code(), Some(0));
        assert_eq!(netsynth(d.path(), &["simulate", "project.toml"]).status.code(), Some(0));
    }
    for f in ["synthesis.json", "dec_controllers.json", "cen_controller.json", "controller_table.txt", "simulation.json", "trace_dec.csv"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bench_json_counters() {
    let dir = workspace("heating", HEATING);
    let o = netsynth(dir.path(), &["--json", "bench", "project.toml", "--n-list", "3..6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["dec_linear"], true);
    assert_eq!(r["all_identical"], true);
    assert_eq!(r["rows"][1]["dec_evaluations"], 2132);
    assert_eq!(r["rows"][1]["cen_evaluations"], "36734893");
}

#[test]
fn report_lists_discrepancies() {
    let dir = workspace("heating", HEATING);
    let o = netsynth(dir.path(), &["--json", "report", "project.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ids: Vec<&str> = r["discrepancies"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["eta_divisibility", "controller_table_row_order", "trace_replay"]);
}

#[test]
fn bad_subcommand_is_config_error() {
    let o = netsynth(Path::new("."), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(4));
}
