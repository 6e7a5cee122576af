use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cfg(name: &str) -> PathBuf {
    configs().join(format!("{name}.json"))
}

fn skewcrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewcrit"))
        .args(args)
        .env_remove("SKEWCRIT_SEED")
        .output()
        .expect("binary runs")
}

fn run_path(args: &[&str], path: &Path) -> Output {
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.insert(1, path.display().to_string());
    let refs: Vec<&str> = full.iter().map(String::as_str).collect();
    skewcrit(&refs)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_prints_the_critical_point() {
    let o = run_path(&["solve", "--y", "0.25"], &cfg("trivial"));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("x_c = (0.250000000000, 0.000000000000)"), "{}", stdout(&o));
}

#[test]
fn solve_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.json");
    let o = run_path(&["solve", "--y", "0.4", "--out", out.to_str().unwrap()], &cfg("skew3d"));
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["command"], "solve");
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
    assert!(json.get("timestamp").is_some());
    let cond = json["results"]["hessian_condition_number"].as_f64().unwrap();
    assert!((cond - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9);
}

#[test]
fn degenerate_problem_exits_with_numeric_failure() {
    let o = run_path(&["solve"], &cfg("degenerate"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn malformed_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version": 1, "alpha": ["x1 +"], "delta": [], "g": []}"#).unwrap();
    assert_eq!(run_path(&["solve"], &bad).status.code(), Some(2));
    std::fs::write(&bad, r#"{"version": 99}"#).unwrap();
    assert_eq!(run_path(&["solve"], &bad).status.code(), Some(2));
    assert_eq!(run_path(&["solve"], &dir.path().join("missing.json")).status.code(), Some(2));
    assert_eq!(run_path(&["solve", "--y", "1,2"], &cfg("trivial")).status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(skewcrit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(skewcrit(&["--help"]).status.code(), Some(0));
}

#[test]
fn continuation_emits_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    let o = run_path(
        &["continue", "--y-from", "-1", "--y-to", "1", "--steps", "5", "--out", csv.to_str().unwrap()],
        &cfg("skew3d"),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y1,x1,x2,x3,cond,converged"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        let y: f64 = cols[0].parse().unwrap();
        let x1: f64 = cols[1].parse().unwrap();
        assert!((y - (-1.0 + 0.5 * k as f64)).abs() < 1e-15);
        assert!((x1 - y).abs() < 1e-10);
        assert_eq!(cols[5], "true");
    }
}

#[test]
fn continuation_rejects_families() {
    let o = run_path(&["continue", "--y-from", "0", "--y-to", "1"], &cfg("perturbed-trivial"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn contact_of_identical_problems_is_machine_limited() {
    let o = run_path(&["contact"], &cfg("identical-family"));
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("slope = machine-limited"), "{s}");
    assert!(s.contains("PASS"));
}

#[test]
fn gamma_contact_reports_order_two() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("contact.json");
    let o = run_path(&["contact", "--report", report.to_str().unwrap()], &cfg("perturbed-trivial"));
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true), "{json}");
    let slope = json["results"]["slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.1);
    assert_eq!(json["results"]["residual"][1].as_f64().unwrap(), -1.0);
}

#[test]
fn predict_residual_passes_on_perturbed_constraint() {
    let o = run_path(&["predict-residual"], &cfg("g-perturbed"));
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("predicted = (-0.500000000000, 0.000000000000)"), "{s}");
    assert!(s.contains("check prediction: PASS"));
}

#[test]
fn list_examples_is_stable() {
    let a = stdout(&skewcrit(&["list-examples"]));
    let b = stdout(&skewcrit(&["list-examples"]));
    assert_eq!(a, b);
    let names: Vec<&str> = a.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert!(names.len() >= 6);
    for n in ["trivial", "skew3d", "degenerate", "perturbed-trivial", "reflection-symmetric", "odd-perturbation"] {
        assert!(names.contains(&n), "missing {n}");
    }
}

#[test]
fn seed_override_is_recorded_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_skewcrit"))
            .args(["--no-timestamp", "solve"])
            .arg(cfg("skew3d"))
            .args(["--out"])
            .arg(&out)
            .env("SKEWCRIT_SEED", "42")
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["seed"], 42);

    let bad = Command::new(env!("CARGO_BIN_EXE_skewcrit"))
        .args(["solve"])
        .arg(cfg("trivial"))
        .env("SKEWCRIT_SEED", "forty")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("SKEWCRIT_SEED"));
}

#[test]
fn verify_rejects_a_corrupted_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    std::fs::write(dir.path().join("skew3d.json"), "{ not json").unwrap();
    let o = skewcrit(&["verify", "--suite", "solver", "--config-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let missing = skewcrit(&["verify", "--config-dir", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn verify_passes_on_the_shipped_configs() {
    let o = skewcrit(&["--no-timestamp", "verify", "--suite", "contact", "--config-dir", configs().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("criterion") && l.ends_with("checks)")));
}
