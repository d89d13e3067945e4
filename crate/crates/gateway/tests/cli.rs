mod common;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::{config, start};

fn rating(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rating"));
    for (key, _) in std::env::vars() {
        if key.starts_with("RATING_") {
            cmd.env_remove(key);
        }
    }
    cmd.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TABLE: &str = "\
+------------------+------------+------------------+
| Contract version | Deployment | Rating operation |
+------------------+------------+------------------+
| Simple           |         10 |              0.2 |
| ProvableSim      |         10 |                2 |
| ChainlinkSim     |         10 |              2-8 |
+------------------+------------+------------------+
currency units; model-calibrated, rating priced on the new_resource branch
";

#[test]
fn cost_report_default_output() {
    let o = rating(&["cost-report"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), TABLE);
}

#[test]
fn cost_report_jsonl_and_single_mode() {
    let o = rating(&["cost-report", "--mode", "chainlink", "--format", "jsonl"]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["mode"], "chainlink");
    assert_eq!(lines[0]["deployment"], "10");
    assert_eq!((lines[0]["rating_min"].as_str(), lines[0]["rating_max"].as_str()), (Some("2"), Some("8")));
    assert_eq!(rating(&["cost-report", "--mode", "bogus"]).status.code(), Some(2));
}

#[test]
fn cost_report_reads_a_calibration_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.toml");
    let shipped = include_str!("../../core/calibration/default.toml");
    std::fs::write(&path, shipped.replace("gas_price = \"0.000001\"", "gas_price = \"0.000002\"")).unwrap();
    let o = rating(&["cost-report", "--calibration", path.to_str().unwrap(), "--mode", "simple", "--format", "jsonl"]);
    let row: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(row["deployment"], "20");
    assert_eq!(row["rating_min"], "0.4");
}

#[test]
fn rate_without_session_is_refused() {
    let s = start(config(None));
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("none.json");
    let o = rating(&[
        "--server",
        &s.base,
        "--session-file",
        session.to_str().unwrap(),
        "rate",
        "https://www.youtube.com/watch?v=x",
        "--like",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("Authentication required."), "{}", stderr(&o));
    assert_eq!(s.service.height(), 0);
}

#[test]
fn auth_rate_and_read_back() {
    let s = start(config(None));
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("nested").join("session.json");
    let base = ["--server", s.base.as_str(), "--session-file", session.to_str().unwrap()];
    let run = |extra: &[&str]| rating(&[&base[..], extra].concat());

    let o = run(&["auth", "--provider", "github", "--credential", "alice-secret"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("user_id 466c18d13a3fbfbe7c8a8a0083399a13"));
    assert!(session.exists());

    let o = run(&["auth", "--provider", "github", "--credential", "nope"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&["rate", "https://www.youtube.com/watch?v=x", "--like", "--estimate"]);
    assert!(stdout(&o).contains("status estimate"));
    assert!(stdout(&o).contains("gas 200000 cost 0.2"));
    assert_eq!(s.service.height(), 0);

    let o = run(&["rate", "https://www.youtube.com/watch?v=x", "--like"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("status mined"));
    let o = run(&["rate", "https://www.youtube.com/watch?v=x", "--like"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Multiple ratings for the same resource are not allowed."));
    let o = run(&["rate", "https://evil.example/x", "--dislike"]);
    assert!(stderr(&o).contains("Invalid resource."));

    let o = run(&["resources"]);
    assert_eq!(stdout(&o).trim(), "1      0  https://www.youtube.com/watch?v=x");
    let o = run(&["history"]);
    assert_eq!(stdout(&o).trim(), "like     https://www.youtube.com/watch?v=x");
    let o = run(&["--json", "history", "466c18d13a3fbfbe7c8a8a0083399a13"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[0]["vote"], true);
}

#[test]
fn like_and_dislike_are_exclusive() {
    assert_eq!(rating(&["rate", "https://github.com/a", "--like", "--dislike"]).status.code(), Some(2));
    assert_eq!(rating(&["rate", "https://github.com/a"]).status.code(), Some(2));
}

#[test]
fn chain_inspect_on_fresh_node_shows_genesis_only() {
    let s = start(config(None));
    let o = rating(&["--server", &s.base, "chain", "inspect"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let zero = "0".repeat(64);
    assert!(lines[0].starts_with("height 0 hash "));
    assert!(lines[0].contains(&format!("prev {zero} txs 0 gas 0 difficulty 0")));
}

#[test]
fn chain_inspect_reads_and_verifies_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.jsonl");
    let s = start(config(Some(path.clone())));
    let token = common::login(&s.base, "github", "alice-secret");
    common::rate(&s.base, &token, "https://github.com/a", true);
    let o = rating(&["chain", "inspect", "--file", path.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(stdout(&o).lines().nth(1).unwrap().contains("txs 1 gas 200000"));

    let mut text = std::fs::read_to_string(&path).unwrap();
    text = text.replacen("\"vote\":true", "\"vote\":false", 1);
    std::fs::write(&path, text).unwrap();
    let o = rating(&["chain", "inspect", "--file", path.to_str().unwrap()]);
    assert!(!o.status.success(), "a tampered file must not verify");
}

#[test]
fn node_run_serves_http() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.jsonl");
    let mut child = Command::new(env!("CARGO_BIN_EXE_rating"))
        .args(["node", "run", "--listen", "127.0.0.1:0", "--chain-file", chain.to_str().unwrap(), "--difficulty", "4"])
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected {line:?}")).to_string();
    let base = format!("http://{addr}");
    let token = common::login(&base, "spotify", "carol-secret");
    let r = common::rate(&base, &token, "https://open.spotify.com/track/9", false);
    assert_eq!(r.status, 202, "{:?}", r.body);
    assert_eq!(common::post(&base, "/admin/mine", None, serde_json::json!({})).status, 404);
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(std::fs::read_to_string(&chain).unwrap().lines().count(), 2);
}

#[test]
fn sim_runs_a_scenario() {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../netsim/scenarios/partition_heal.toml");
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    let o = rating(&["sim", scenario.to_str().unwrap(), "--events", events.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["submitted"], 200);
    let first: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(&events).unwrap().lines().next().unwrap()).unwrap();
    assert!(first["tick"].is_u64() && first["kind"].is_string());
}
