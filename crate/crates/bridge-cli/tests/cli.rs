//! Exit codes, config precedence, and the inspect command.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

fn bridge() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bridge"));
    cmd.env_remove("BRIDGE_API_KEY")
        .env_remove("BRIDGE_API_BASE");
    cmd
}

fn solve_with_stdin(input: &str, target: Option<&str>) -> (i32, String, String) {
    let mut cmd = bridge();
    cmd.arg("solve");
    if let Some(t) = target {
        cmd.args(["--target", t]);
    }
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    let output = child.wait_with_output().unwrap();
    (
        output.status.code().unwrap(),
        String::from_utf8(output.stdout).unwrap(),
        String::from_utf8(output.stderr).unwrap(),
    )
}

#[test]
fn solve_laundry_with_answer_equation() {
    let system = "raymond_laundry = sarah_laundry / 2\n\
sarah_laundry = 4 * david_laundry\n\
sarah_laundry = 400\n\
ans = raymond_laundry - david_laundry\n";
    let (code, stdout, _) = solve_with_stdin(system, None);
    assert_eq!(code, 0);
    assert!(stdout.contains("ans = 100"), "stdout: {stdout}");
}

#[test]
fn solve_inconsistent_exits_one() {
    let (code, stdout, _) = solve_with_stdin("x = 1\nx = 2\n", Some("x"));
    assert_eq!(code, 1);
    assert!(stdout.contains("inconsistent"));
}

#[test]
fn solve_garbage_exits_two_with_position() {
    let (code, _, stderr) = solve_with_stdin("x = (1 + 2\n", None);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
    assert!(stderr.contains("column"), "stderr: {stderr}");
}

#[test]
fn solve_quadratic_prints_candidates() {
    let (code, stdout, _) = solve_with_stdin("ans ^ 2 = 9\n", None);
    assert_eq!(code, 0);
    assert!(stdout.contains("ans in {-3, 3}"), "stdout: {stdout}");
    assert!(stdout.contains("ans = 3"), "stdout: {stdout}");
}

fn write_tiny_run(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let dataset = dir.join("data.jsonl");
    std::fs::write(
        &dataset,
        format!(
            "{}\n{}\n",
            serde_json::json!({"question": "First question?", "answer": "#### 24"}),
            serde_json::json!({"question": "Second question?", "answer": "#### 5"}),
        ),
    )
    .unwrap();
    let script = dir.join("script.jsonl");
    let responses = [
        "erased one",
        "fact one",
        "bob = 12\nalice = 2 * bob",
        "ans = alice",
        "erased two",
        "fact two",
        "v = 5",
        "ans = v",
    ];
    let mut text = String::new();
    for r in responses {
        text.push_str(&serde_json::to_string(r).unwrap());
        text.push('\n');
    }
    std::fs::write(&script, text).unwrap();
    (dataset, script)
}

#[test]
fn run_limit_one_writes_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, script) = write_tiny_run(dir.path());
    let out = dir.path().join("out.jsonl");
    let status = bridge()
        .args([
            "run",
            "--backend",
            "scripted",
            "--workers",
            "1",
            "--limit",
            "1",
        ])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--script")
        .arg(&script)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.ends_with('\n'));
}

#[test]
fn inspect_prints_stage_blocks_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, script) = write_tiny_run(dir.path());
    let out = dir.path().join("out.jsonl");
    let status = bridge()
        .args(["run", "--backend", "scripted", "--workers", "1", "--traces"])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--script")
        .arg(&script)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let output = bridge()
        .args(["inspect", "--id", "gsm8k-0"])
        .arg("--results")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let positions: Vec<usize> = ["== Erase", "== Decompose", "== Translate", "== Answer"]
        .iter()
        .map(|h| stdout.find(h).unwrap_or_else(|| panic!("missing {h}")))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "stage order");
    assert!(stdout.contains("prediction: 24"));

    // Stage filter leaves only answer attempts, numbered from 1.
    let output = bridge()
        .args(["inspect", "--id", "gsm8k-0", "--stage", "Answer"])
        .arg("--results")
        .arg(&out)
        .output()
        .unwrap();
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("== Answer attempt 1 (temperature 0)"));
    assert!(!stdout.contains("== Erase"));

    // Unknown id exits 3.
    let status = bridge()
        .args(["inspect", "--id", "nope"])
        .arg("--results")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn inspect_without_traces_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, script) = write_tiny_run(dir.path());
    let out = dir.path().join("out.jsonl");
    bridge()
        .args(["run", "--backend", "scripted", "--workers", "1"])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--script")
        .arg(&script)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    let status = bridge()
        .args(["inspect", "--id", "gsm8k-0"])
        .arg("--results")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn eval_empty_results_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, _) = write_tiny_run(dir.path());
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let status = bridge()
        .args(["eval"])
        .arg("--results")
        .arg(&empty)
        .arg("--dataset")
        .arg(&dataset)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, _) = write_tiny_run(dir.path());

    // replay without cache
    let status = bridge()
        .args(["run", "--backend", "replay"])
        .arg("--dataset")
        .arg(&dataset)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // scripted without script
    let status = bridge()
        .args(["run", "--backend", "scripted"])
        .arg("--dataset")
        .arg(&dataset)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // live without credentials
    let status = bridge()
        .args(["run", "--backend", "live"])
        .arg("--dataset")
        .arg(&dataset)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown format
    let status = bridge()
        .args(["run", "--backend", "scripted", "--format", "csv"])
        .arg("--dataset")
        .arg(&dataset)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn print_config_resolves_flag_env_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, script) = write_tiny_run(dir.path());
    let config_path = dir.path().join("bridge.toml");
    std::fs::write(
        &config_path,
        format!(
            "model = \"file-model\"\nshots = 4\napi_base = \"https://file.example/v1\"\n\
             backend = \"scripted\"\nscript = {script:?}\n",
            script = script.display().to_string(),
        ),
    )
    .unwrap();

    let output = bridge()
        .args(["run", "--print-config", "--model", "flag-model"])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--config")
        .arg(&config_path)
        .env("BRIDGE_API_BASE", "https://env.example/v1")
        .output()
        .unwrap();
    assert!(output.status.success());
    let config: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();

    // Flag beats file.
    assert_eq!(config["model"], "flag-model");
    // Env beats file.
    assert_eq!(config["api_base"], "https://env.example/v1");
    // File beats defaults.
    assert_eq!(config["shots"], 4);
    assert_eq!(config["backend"], "scripted");
    // Defaults fill the rest.
    assert_eq!(config["retry"], 5);
    assert_eq!(config["self_consistency"], 1);
    // The API key never appears, only whether it is set.
    assert_eq!(config["api_key_set"], false);
    assert!(config.get("api_key").is_none());
}

#[test]
fn voting_run_stays_within_call_budget() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("data.jsonl");
    std::fs::write(
        &dataset,
        format!(
            "{}\n",
            serde_json::json!({"question": "Only question?", "answer": "#### 5"})
        ),
    )
    .unwrap();
    let script = dir.path().join("script.jsonl");
    let mut responses = vec!["erased".to_string(), "fact".to_string()];
    for _ in 0..3 {
        responses.push("v = 5".to_string());
        responses.push("ans = v".to_string());
    }
    let text: String = responses
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect();
    std::fs::write(&script, text).unwrap();

    let out = dir.path().join("out.jsonl");
    let status = bridge()
        .args([
            "run",
            "--backend",
            "scripted",
            "--workers",
            "1",
            "--traces",
            "--self-consistency",
            "3",
        ])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--script")
        .arg(&script)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let line = std::fs::read_to_string(&out).unwrap();
    let record: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(record["prediction"], 5.0);
    let calls = record["traces"].as_array().unwrap().len();
    // Voting budget: 2 + k * (1 + retry).
    assert!(calls <= 2 + 3 * (1 + 5), "calls: {calls}");
    assert_eq!(calls, 8);
}

#[test]
fn results_are_stable_across_scripted_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, script) = write_tiny_run(dir.path());
    let out1 = dir.path().join("a.jsonl");
    let out2 = dir.path().join("b.jsonl");
    for out in [&out1, &out2] {
        let status = bridge()
            .args(["run", "--backend", "scripted", "--workers", "1"])
            .arg("--dataset")
            .arg(&dataset)
            .arg("--script")
            .arg(&script)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}
