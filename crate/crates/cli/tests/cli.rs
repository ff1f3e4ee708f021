//! Runs the built binary and checks exit codes and written files.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn driftplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftplan"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A scratch directory with a 300 m straight track and a config using it.
fn workspace(extra: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    let track = "# width=10.0 closed=0\nx,y\n0.0,0.0\n150.0,0.0\n300.0,0.0\n";
    std::fs::write(dir.path().join("straight.csv"), track).unwrap();
    let config = format!(
        "[paths]\ntrack = \"straight.csv\"\nmanifold = \"gravel.esm\"\n\
         [run]\nmode = \"plan\"\noutput_dir = \"out\"\n\
         [initial]\ns = 10.0\nv = 10.0\n\
         [planner]\nk_hor = 4\n{extra}"
    );
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

#[test]
fn missing_config_exits_with_1() {
    let dir = TempDir::new().unwrap();
    let o = driftplan(dir.path(), &["--config", "nope.toml", "plan"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn unknown_config_key_exits_with_1() {
    let dir = workspace("bogus = 1\n");
    let o = driftplan(dir.path(), &["--config", "run.toml", "esm", "show"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plan_without_a_manifold_exits_with_1() {
    let dir = workspace("");
    let o = driftplan(dir.path(), &["--config", "run.toml", "plan"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn build_show_plan_and_run() {
    let dir = workspace("");
    let o = driftplan(dir.path(), &["--config", "run.toml", "esm", "build"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("gravel.esm").is_file());
    assert!(stdout(&o).contains("wrote"));

    let o = driftplan(dir.path(), &["--config", "run.toml", "esm", "show"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("matches_parameters = true"));

    let o = driftplan(dir.path(), &["--config", "run.toml", "--out", "planned", "--plots", "plan"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("termination = "));
    for f in ["plan.csv", "plan_stats.txt", "plan.svg"] {
        assert!(dir.path().join("planned").join(f).is_file(), "{f}");
    }

    // `run` follows run.mode, here a plan
    let o = driftplan(dir.path(), &["--config", "run.toml", "--seedless", "run"]);
    assert_eq!(o.status.code(), Some(0));
    let a = std::fs::read(dir.path().join("planned/plan.csv")).unwrap();
    let b = std::fs::read(dir.path().join("out/plan.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_lambda_range_exits_with_2() {
    let dir = workspace("[esm.sweep]\nlambda_min = 0.5\nlambda_max = 0.4\n");
    let o = driftplan(dir.path(), &["--config", "run.toml", "esm", "build"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_laps_succeed() {
    let dir = workspace("");
    assert_eq!(driftplan(dir.path(), &["--config", "run.toml", "esm", "build"]).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("run.toml")).unwrap().replace("mode = \"plan\"", "mode = \"lap\"\nlaps = 0");
    std::fs::write(dir.path().join("lap.toml"), text).unwrap();
    let o = driftplan(dir.path(), &["--config", "lap.toml", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("laps_requested = 0"));
    assert!(dir.path().join("out/lap.csv").is_file());
}
