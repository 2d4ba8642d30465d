use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

fn sandman(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sandman"))
        .current_dir(dir)
        .env_remove("SANDMAN_API_KEY")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn write_plan(dir: &Path, body: &str) {
    fs::write(dir.join("plan.toml"), body).unwrap();
}

#[test]
fn help_documents_every_flag() {
    let d = TempDir::new().unwrap();
    let top = String::from_utf8(ok(sandman(d.path(), &["--help"])).stdout).unwrap();
    for flag in [
        "--config",
        "--provider",
        "--mock",
        "--seed",
        "--out",
        "--temperature",
        "--capture",
        "--transcript",
        "--verbose",
    ] {
        assert!(top.contains(flag), "{flag} missing from --help");
    }
    let run = String::from_utf8(ok(sandman(d.path(), &["experiment", "run", "--help"])).stdout).unwrap();
    for flag in ["--plan", "--resume", "--samples"] {
        assert!(run.contains(flag));
    }
    let mpi = String::from_utf8(ok(sandman(d.path(), &["mpi", "--help"])).stdout).unwrap();
    for flag in ["--trait", "--direction", "--runs", "--shuffle"] {
        assert!(mpi.contains(flag));
    }
}

#[test]
fn config_errors_exit_2() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&sandman(d.path(), &["--bogus"])), 2);
    assert_eq!(
        code(&sandman(d.path(), &["--provider", "carrier-pigeon", "mpi", "--trait", "C", "--direction", "pos"])),
        2
    );
    assert_eq!(code(&sandman(d.path(), &["--mock", "mpi", "--trait", "Z", "--direction", "pos"])), 2);
    assert_eq!(code(&sandman(d.path(), &["--temperature", "5", "mpi", "--trait", "C", "--direction", "pos"])), 2);
    write_plan(d.path(), "conditions = [\"Neutral\", \"Q+\"]\n");
    assert_eq!(code(&sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml"])), 2);
    fs::write(d.path().join("bad.toml"), "colour = \"blue\"\n").unwrap();
    assert_eq!(code(&sandman(d.path(), &["--config", "bad.toml", "agent", "run"])), 2);
}

#[test]
fn missing_api_key_exits_3_and_names_the_variable() {
    let d = TempDir::new().unwrap();
    let o = sandman(d.path(), &["--provider", "http", "mpi", "--trait", "C", "--direction", "pos"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("SANDMAN_API_KEY"));
}

#[test]
fn analysis_preconditions_exit_4() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&sandman(d.path(), &["experiment", "report"])), 4);
    assert_eq!(code(&sandman(d.path(), &["experiment", "analyze"])), 4);
    write_plan(d.path(), "samples = 3\nconditions = [\"Neutral\", \"C+\"]\n");
    ok(sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml"]));
    assert_eq!(code(&sandman(d.path(), &["experiment", "analyze", "--control", "E+"])), 4);
}

#[test]
fn failed_bootstrap_exits_5() {
    let d = TempDir::new().unwrap();
    let transcript = (0..3).map(|_| "{\"response\":{\"text\":\"I would rather not plan today.\",\"prompt_tokens\":1,\"completion_tokens\":1,\"latency_ms\":1}}\n").collect::<String>();
    fs::write(d.path().join("t.jsonl"), transcript).unwrap();
    let o = sandman(d.path(), &["--provider", "scripted", "--transcript", "t.jsonl", "agent", "run"]);
    assert_eq!(code(&o), 5, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn mpi_is_deterministic_and_sends_the_temperature() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args =
        ["--mock", "--seed", "3", "--capture", "cap.jsonl", "mpi", "--trait", "O", "--direction", "neg", "--runs", "2"];
    let oa = ok(sandman(a.path(), &args));
    let ob = ok(sandman(b.path(), &args));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(
        fs::read(a.path().join("out/mpi/o-neg.json")).unwrap(),
        fs::read(b.path().join("out/mpi/o-neg.json")).unwrap()
    );
    let cap = fs::read_to_string(a.path().join("cap.jsonl")).unwrap();
    assert!(!cap.is_empty());
    for line in cap.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["request"]["temperature"], 0.7);
    }
    let out = String::from_utf8(oa.stdout).unwrap();
    assert!(out.contains("| O | Neg |"));
    assert!(out.contains("| B | N/A |"));
}

#[test]
fn plan_run_analyze_report_is_fast_and_resumable() {
    let d = TempDir::new().unwrap();
    write_plan(d.path(), "seed = 11\nsamples = 20\nconditions = [\"Neutral\", \"C+\"]\n");
    let start = Instant::now();
    ok(sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml"]));
    ok(sandman(d.path(), &["experiment", "analyze"]));
    ok(sandman(d.path(), &["experiment", "report"]));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    let md = fs::read_to_string(d.path().join("out/report.md")).unwrap();
    assert!(md.contains("## Task durations"));
    assert!(d.path().join("out/report.csv").exists());

    // Rerunning needs --resume; resuming a complete run adds nothing.
    assert_eq!(code(&sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml"])), 2);
    let records = d.path().join("out/c-pos/records.jsonl");
    let before = fs::read(&records).unwrap();
    ok(sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml", "--resume"]));
    assert_eq!(fs::read(&records).unwrap(), before);

    // Extending the sample count only appends the missing indices.
    ok(sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml", "--resume", "--samples", "25"]));
    let text = fs::read_to_string(&records).unwrap();
    let mut idx: Vec<u64> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["index"].as_u64().unwrap())
        .collect();
    assert_eq!(idx.len(), 25);
    idx.dedup();
    assert_eq!(idx, (0..25).collect::<Vec<_>>());
}

#[test]
fn baseline_interventions_report_positions() {
    let d = TempDir::new().unwrap();
    write_plan(d.path(), "samples = 15\nconditions = [\"Neutral\", \"Sys\", \"Rand\", \"Sys & Rand\"]\n");
    ok(sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml"]));
    ok(sandman(d.path(), &["experiment", "analyze"]));
    ok(sandman(d.path(), &["experiment", "report"]));
    let md = fs::read_to_string(d.path().join("out/report.md")).unwrap();
    assert!(md.contains("## Schedule positions"));
    assert!(md.contains("Rand rho"));
    assert!(md.contains("Sys & Rand rho"));
    assert!(!md.contains("| Sys rho"));
}

#[test]
fn inventory_joins_the_experiment_report() {
    let d = TempDir::new().unwrap();
    write_plan(d.path(), "samples = 5\nconditions = [\"Neutral\", \"C+\"]\n");
    ok(sandman(d.path(), &["--mock", "experiment", "run", "--plan", "plan.toml"]));
    ok(sandman(d.path(), &["--mock", "mpi", "--trait", "C", "--direction", "pos", "--runs", "1"]));
    ok(sandman(d.path(), &["experiment", "analyze"]));
    ok(sandman(d.path(), &["experiment", "report"]));
    let md = fs::read_to_string(d.path().join("out/report.md")).unwrap();
    assert!(md.contains("## Personality inventory"));
}

#[test]
fn agent_days_are_deterministic_and_replayable() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(sandman(a.path(), &["--seed", "5", "agent", "run", "--condition", "N+", "--days", "2"]));
    ok(sandman(b.path(), &["--seed", "5", "agent", "run", "--condition", "N+", "--days", "2", "--speed", "0.000001"]));
    for f in ["actions.jsonl", "episodic.jsonl", "state.json"] {
        assert_eq!(
            fs::read(a.path().join("out").join(f)).unwrap(),
            fs::read(b.path().join("out").join(f)).unwrap(),
            "{f}"
        );
    }
    let o = ok(sandman(a.path(), &["agent", "replay", "--check", "out/state.json"]));
    assert_eq!(o.stdout, fs::read(a.path().join("out/state.json")).unwrap());

    // A tampered state no longer matches.
    let state = fs::read_to_string(a.path().join("out/state.json")).unwrap();
    fs::write(a.path().join("other.json"), state.replace("\"day\": 2", "\"day\": 3")).unwrap();
    assert_eq!(code(&sandman(a.path(), &["agent", "replay", "--check", "other.json"])), 5);
}

#[test]
fn profile_file_is_honoured() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("p.toml"), "name = \"Jo Park\"\nrole = \"a nurse\"\ncondition = \"A-\"\n").unwrap();
    ok(sandman(d.path(), &["--mock", "--capture", "cap.jsonl", "agent", "run", "--profile", "p.toml"]));
    let cap = fs::read_to_string(d.path().join("cap.jsonl")).unwrap();
    assert!(cap.contains("Jo Park"));
    assert!(cap.contains("a nurse"));
}
