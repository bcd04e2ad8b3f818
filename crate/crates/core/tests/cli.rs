//! End-to-end runs of the binary on temporary directories.

use std::path::Path;
use std::process::{Command, Output};

fn edfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edfnet")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Sets the first `xi` value of component 0 at `t > 1`, `x > 3` to `-0.5`.
fn corrupt_xi(csv: &Path) {
    let text = std::fs::read_to_string(csv).unwrap();
    let mut done = false;
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            if !done && c[0] == "xi" && c[1] == "0" && c[3] != "inf" && c[3] != "x" {
                let (t, x): (f64, f64) = (c[2].parse().unwrap(), c[3].parse().unwrap());
                if t > 1.0 && x > 3.0 {
                    done = true;
                    return format!("{},{},{},{},-5e-1", c[0], c[1], c[2], c[3]);
                }
            }
            l.to_string()
        })
        .collect();
    assert!(done);
    std::fs::write(csv, lines.join("\n") + "\n").unwrap();
}

#[test]
fn version_and_usage_errors() {
    let o = edfnet(&["version"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("edfnet "));
    assert_eq!(code(&edfnet(&["fluid-soft", "--scenario", "tandem", "--out", "x", "--bogus"])), 2);
    assert_eq!(code(&edfnet(&["no-such-command"])), 2);
    assert_eq!(code(&edfnet(&["validate"])), 2);
}

#[test]
fn fluid_hard_round_trip_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hard");
    let o = edfnet(&["fluid-hard", "--scenario", "tandem", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["solution.csv", "direct.csv", "consistency_log.json", "crosscheck.json", "invariants.json", "meta.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let log: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("consistency_log.json")).unwrap()).unwrap();
    assert!(!log["consistency_log"].as_array().unwrap().is_empty());

    assert_eq!(code(&edfnet(&["validate", "--solution", p(&out)])), 0);
    corrupt_xi(&out.join("solution.csv"));
    let o = edfnet(&["validate", "--solution", p(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("invariant violated") && stderr(&o).contains("shape"), "{}", stderr(&o));
}

#[test]
fn fluid_soft_round_trip_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("soft");
    let o = edfnet(&["fluid-soft", "--scenario", "tandem", "--out", p(&out), "--grid-refine", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["grid"]["n_t"], 80);
    assert_eq!(code(&edfnet(&["validate", "--solution", p(&out)])), 0);
    corrupt_xi(&out.join("solution.csv"));
    let o = edfnet(&["validate", "--solution", p(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nonnegativity"), "{}", stderr(&o));
}

#[test]
fn simulate_round_trip_and_tampered_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace");
    let o = edfnet(&["simulate", "--scenario", "tandem", "--policy", "hard", "--n", "50", "--seed", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&edfnet(&["validate", "--trace", p(&out)])), 0);

    // drop one event: the replayed queue no longer balances
    let log = out.join("events.ndjson");
    let text = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let keep: Vec<&str> = lines.iter().enumerate().filter(|(i, _)| *i != lines.len() / 2).map(|(_, l)| *l).collect();
    std::fs::write(&log, keep.join("\n") + "\n").unwrap();
    assert_eq!(code(&edfnet(&["validate", "--trace", p(&out)])), 1);
}

#[test]
fn hard_simulation_below_minimal_scale_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = edfnet(&["simulate", "--scenario", "tandem", "--policy", "hard", "--n", "2", "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("minimal admissible N"), "{}", stderr(&o));
}

#[test]
fn converge_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = edfnet(&[
            "converge", "--scenario", "supercritical-single", "--policy", "hard", "--seed", "7", "--n-list", "10,100", "--reps", "4",
            "--out", p(&out),
        ]);
        assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
        for f in ["report.json", "report.md", "errors.csv"] {
            assert!(out.join(f).is_file());
        }
        std::fs::read_to_string(out.join("errors.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 2 * 4 * 4);
}

#[test]
fn scenario_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/subcritical-single.toml")).unwrap();
    let cases = [
        (base.replace("P = [[0.0]]", "P = [[1.2]]"), "substochastic violated"),
        (base.replace("eps = 0.3", "eps = 0.33"), "nearest grid-aligned eps is 0.3"),
        (base.replace("m = [[0.0, 1.0]]", "m = [[0.0, 0.0]]"), "m must be strictly positive"),
        (base.replace("n_t = 40", "n_t = forty"), "line"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("s{i}.toml"));
        std::fs::write(&path, text).unwrap();
        let o = edfnet(&["fluid-soft", "--scenario", p(&path), "--out", p(&dir.path().join("o"))]);
        assert_eq!(code(&o), 2, "case {i}");
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
    let o = edfnet(&["fluid-soft", "--scenario", "tandem", "--out", p(&dir.path().join("o")), "--tol-overrides", "nonsense=1"]);
    assert_eq!(code(&o), 2);
    let o = edfnet(&["fluid-soft", "--scenario", "tandem", "--out", p(&dir.path().join("o")), "--tol-overrides", "vmvsp=1e-7,invariants=1e-9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
