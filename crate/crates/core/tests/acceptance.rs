//! Acceptance gate: runs every criterion and prints one line per criterion,
//! then checks that the binary's `verify` report is reproducible.

use std::process::{Command, ExitCode};

use skewcrit::acceptance::{run_suite, AcceptanceSettings, Criterion, Suite};

fn describe_failures(c: &Criterion) -> String {
    c.checks
        .iter()
        .filter(|k| !k.passed)
        .map(|k| format!("    {} value={:?} tol={:?} {}", k.name, k.value, k.tolerance, k.detail.as_deref().unwrap_or("")))
        .collect::<Vec<_>>()
        .join("\n")
}

fn all_criteria() -> bool {
    let criteria = match run_suite(Suite::All, &AcceptanceSettings::default(), |c| {
        println!("{}", c.line());
        if !c.passed {
            println!("{}", describe_failures(c));
        }
    }) {
        Ok(c) => c,
        Err(e) => {
            println!("suite aborted: {e}");
            return false;
        }
    };
    criteria.len() == 11 && criteria.iter().all(|c| c.passed)
}

fn verify_once(out: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_skewcrit"))
        .args(["--no-timestamp", "verify", "--suite", "all", "--out"])
        .arg(out)
        .env("SKEWCRIT_SEED", "11")
        .output()
        .expect("binary runs")
}

fn binary_is_deterministic() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let (first, second) = (verify_once(&a), verify_once(&b));
    let stdout = String::from_utf8_lossy(&first.stdout);
    if first.status.code() != Some(0) || second.status.code() != Some(0) {
        return Err(format!("verify exited {:?}/{:?}\n{stdout}", first.status.code(), second.status.code()));
    }
    let lines = stdout.lines().filter(|l| l.starts_with("criterion")).count();
    if lines != 11 || stdout.contains("FAIL") {
        return Err(format!("unexpected verify output\n{stdout}"));
    }
    let (ra, rb) = (std::fs::read(&a).map_err(|e| e.to_string())?, std::fs::read(&b).map_err(|e| e.to_string())?);
    let (ha, hb) = (skewcrit::report::sha256_hex(&ra), skewcrit::report::sha256_hex(&rb));
    if ha != hb {
        return Err(format!("report hashes differ: {ha} vs {hb}"));
    }
    let json: serde_json::Value = serde_json::from_slice(&ra).map_err(|e| e.to_string())?;
    if json["seed"] != 11 || json.get("timestamp").is_some() {
        return Err(format!("report metadata wrong: seed={} timestamp={:?}", json["seed"], json.get("timestamp")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let mut ok = all_criteria();
    match binary_is_deterministic() {
        Ok(()) => println!("binary verify rerun: PASS (identical report hash)"),
        Err(e) => {
            println!("binary verify rerun: FAIL\n{e}");
            ok = false;
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
