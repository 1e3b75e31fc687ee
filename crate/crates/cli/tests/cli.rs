use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
ue_counts = [20, 40]
runs_per_point = 2
modes = ["offload", "partition"]
solvers = ["exact", "cuckoo"]
cuckoo_iterations = 10
"#;

fn mecpart(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mecpart"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    serde_json::from_str(stderr.trim()).unwrap()
}

#[test]
fn run_writes_the_report_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), SMALL).unwrap();
    let out = mecpart(&["run", "cfg.toml", "--out", "res"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let res = dir.path().join("res");
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(
        fs::read_to_string(res.join("runs.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 16
    );
    assert_eq!(fs::read_dir(res.join("traces")).unwrap().count(), 16);
    let trace = fs::read_to_string(res.join("traces/ue40_partition_cuckoo_run1.csv")).unwrap();
    assert!(trace.starts_with("iteration,best_objective\n"));
    assert_eq!(trace.lines().count(), 1 + 11);
    assert!(res.join("manifest.toml").exists());
    assert!(res.join("timing.csv").exists());
    let leftovers: Vec<_> = walk(&res)
        .into_iter()
        .filter(|p| p.ends_with(".partial"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path.display().to_string());
        }
    }
    out
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), SMALL).unwrap();
    let out = mecpart(
        &[
            "run",
            "cfg.toml",
            "--out",
            "o",
            "--seed",
            "9",
            "--solvers",
            "exact",
            "--ue-counts",
            "15",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = fs::read_to_string(dir.path().join("o/runs.csv")).unwrap();
    let rows: Vec<&str> = runs.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| r.starts_with("15,") && r.contains(",exact,")));
    // run 1 gets 9 ^ 1
    assert!(rows[1].starts_with("15,offload,exact,1,8,"), "{}", rows[1]);
}

#[test]
fn replay_reproduces_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), SMALL).unwrap();
    assert!(mecpart(&["run", "cfg.toml", "--out", "a"], dir.path())
        .status
        .success());
    let out = mecpart(&["replay", "a/manifest.toml", "--out", "b"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in [
        "summary.csv",
        "runs.csv",
        "manifest.toml",
        "traces/ue20_offload_exact_run0.csv",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn config_errors_are_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "seed = 1\nue_counts = [50]\nnoise_power_w = 1.0\n",
    )
    .unwrap();
    let v = error_line(&mecpart(&["run", "bad.toml"], dir.path()));
    assert_eq!(v["error"], "config");
    assert_eq!(v["line"], 3);

    fs::write(dir.path().join("bad.toml"), "runs_per_point = 0\n").unwrap();
    let v = error_line(&mecpart(&["run", "bad.toml"], dir.path()));
    assert_eq!(v["field"], "runs_per_point");
    assert_eq!(v["line"], 1);
}

#[test]
fn missing_file_and_bad_flags_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let v = error_line(&mecpart(&["run", "nope.toml"], dir.path()));
    assert_eq!(v["error"], "io");
    let out = mecpart(&["run", "x.toml", "--solvers", "simplex"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.toml"),
        "ue_counts = [5]\nruns_per_point = 1\nsolvers = [\"exact\"]\n",
    )
    .unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let v = error_line(&mecpart(
        &["run", "cfg.toml", "--out", "blocker/sub"],
        dir.path(),
    ));
    assert_eq!(v["error"], "io");
}

#[test]
fn oracle_subcommand_prints_the_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let instance = r#"
mode = "offload"
rb_choices = [50, 100]

[[tasks]]
id = 0
ue = 0
size_bits = 8e6
arrival_s = 0.0
deadline_s = 0.6

[[tasks]]
id = 1
ue = 1
size_bits = 8e6
arrival_s = 0.01
deadline_s = 0.6

[[tasks]]
id = 2
ue = 2
size_bits = 8e6
arrival_s = 0.02
deadline_s = 0.6
"#;
    fs::write(dir.path().join("inst.toml"), instance).unwrap();
    let out = mecpart(&["oracle", "inst.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // Two servers, three simultaneous large tasks: one must drop.
    assert_eq!(v["drops"], 1);
    assert_eq!(v["leaves"], 5u64.pow(3));
    assert_eq!(v["objective"], v["exact_objective"]);
}
