//! Black-box tests of the `qevent` binary: exit codes, file outputs, and
//! reproducibility. A coarse 32x32 reactor serves as the fast test plant
//! (synthesis in about a second); the full-resolution benchmarks are
//! exercised by the acceptance suite.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qevent::TransitionHypergraph;

const BIN: &str = env!("CARGO_BIN_EXE_qevent");

fn qevent(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Coarse reactor config, synthesizable in about a second.
fn write_config(dir: &Path) -> String {
    let out_dir = dir.join("out");
    let path = dir.join("run.toml");
    fs::write(
        &path,
        format!(
            "benchmark = \"batch\"\ngrid_resolution = [32, 32]\noutput_dir = {:?}\n",
            out_dir.display().to_string()
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn no_command_is_a_usage_error() {
    let out = qevent(&[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("synthesize"), "errors should name the commands");
}

#[test]
fn help_exits_zero_and_lists_the_commands() {
    let out = qevent(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for cmd in ["synthesize", "simulate", "compare", "verify", "dump-graph"] {
        assert!(text.contains(cmd), "--help must mention {cmd}");
    }
}

#[test]
fn a_switch_penalty_of_one_is_rejected() {
    let out = qevent(&["--lambda", "1.0", "synthesize"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("lambda < 1"),
        "the message must cite the open bound: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_benchmarks_and_config_keys_are_usage_errors() {
    let out = qevent(&["--benchmark", "furnace", "synthesize"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("furnace"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "bench = \"batch\"\n").unwrap();
    let out = qevent(&["--config", path.to_str().unwrap(), "synthesize"]);
    assert_eq!(code(&out), 1, "unknown keys must not pass silently");
}

#[test]
fn simulate_without_a_table_is_a_usage_error() {
    // Running simulate before synthesize is a usage mistake, not a failure
    // of the run itself.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = qevent(&["--config", &cfg, "simulate"]);
    assert_eq!(code(&out), 1, "missing table: {}", stderr(&out));
    assert!(stderr(&out).contains("cannot read table"), "{}", stderr(&out));
}

#[test]
fn an_unstabilizable_start_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let path = dir.path().join("run.toml");
    // At 32 cells per axis the swing-up start has no worst-case plan.
    fs::write(
        &path,
        format!(
            "benchmark = \"pendulum\"\ngrid_resolution = [32, 32]\noutput_dir = {:?}\n",
            out_dir.display().to_string()
        ),
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    assert_eq!(code(&qevent(&["--config", cfg, "synthesize"])), 0);
    let out = qevent(&["--config", cfg, "simulate"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no control for cell"), "{}", stderr(&out));
}

#[test]
fn synthesize_simulate_and_compare_produce_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("out");

    let out = qevent(&["--config", &cfg, "synthesize"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["value.csv", "lazy_value.csv", "report.txt"] {
        assert!(out_dir.join(name).is_file(), "synthesize must write {name}");
    }
    let report = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert!(report.contains("config"), "report carries the config hash");

    let out = qevent(&["--config", &cfg, "simulate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["trajectory.csv", "trajectory.svg", "staircase.svg", "summary.txt"] {
        assert!(out_dir.join(name).is_file(), "simulate must write {name}");
    }
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("reached target"), "{summary}");

    let out = qevent(&["--config", &cfg, "compare"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out_dir.join("comparison.csv").is_file());
    let table = stdout(&out);
    for label in ["ordinary", "lazy", "heuristic"] {
        assert!(table.contains(label), "compare must race {label}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let run = || -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        assert_eq!(code(&qevent(&["--config", &cfg, "synthesize"])), 0);
        assert_eq!(code(&qevent(&["--config", &cfg, "simulate"])), 0);
        assert_eq!(code(&qevent(&["--config", &cfg, "dump-graph"])), 0);
        (
            fs::read(out_dir.join("lazy_value.csv")).unwrap(),
            fs::read(out_dir.join("trajectory.csv")).unwrap(),
            fs::read(out_dir.join("graph.txt")).unwrap(),
        )
    };
    let (table_a, traj_a, graph_a) = run();
    // Start from a clean slate so stale files cannot mask a difference.
    fs::remove_dir_all(&out_dir).unwrap();
    let (table_b, traj_b, graph_b) = run();
    assert!(table_a == table_b, "value tables must not depend on the run");
    assert!(traj_a == traj_b, "trajectories must not depend on the run");
    assert!(graph_a == graph_b, "graph dumps must not depend on the run");
}

#[test]
fn dumped_graphs_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(code(&qevent(&["--config", &cfg, "dump-graph"])), 0);
    let text = fs::read_to_string(dir.path().join("out").join("graph.txt")).unwrap();
    let graph = TransitionHypergraph::read_dump(text.as_bytes()).unwrap();
    assert_eq!(graph.n_nodes(), 32 * 32);
    assert_eq!(graph.n_controls(), 84, "12 valve positions x 7 heater levels");
    graph.validate().unwrap();
}

#[test]
fn print_config_is_a_fixpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let first = qevent(&["--config", &cfg, "--print-config"]);
    assert_eq!(code(&first), 0);
    let echoed = stdout(&first);
    assert!(echoed.contains("benchmark = \"batch\""));
    assert!(
        echoed.contains("# samples_per_axis unset: benchmark default 2"),
        "{echoed}"
    );

    let path = dir.path().join("echoed.toml");
    fs::write(&path, &echoed).unwrap();
    let second = qevent(&["--config", path.to_str().unwrap(), "--print-config"]);
    assert_eq!(code(&second), 0);
    assert_eq!(stdout(&second), echoed, "printing a printed config changes nothing");
}

#[test]
fn verify_runs_the_battery_clean() {
    let out = qevent(&["verify"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("PASS").count(), 7, "{text}");
    assert!(!text.contains("FAIL"));
}
