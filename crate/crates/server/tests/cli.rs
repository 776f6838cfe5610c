use std::process::Command;

use placegame_server::tools;

fn placegame() -> Command {
    Command::new(env!("CARGO_BIN_EXE_placegame"))
}

#[test]
fn selfplay_logs_feed_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let out = placegame()
        .args(["selfplay", "--matchup", "leader:follower", "--matchup", "alternating:alternating", "--seeds", "3"])
        .arg("--out")
        .arg(&logs)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("leader:follower"), "{stdout}");
    assert_eq!(tools::log_files(&logs).unwrap().len(), 6);
    assert!(logs.join("summary.json").exists());

    let report = dir.path().join("report.json");
    let out = placegame()
        .args(["analyze", "--theta", "1.3", "--length-unit", "tokens", "--log-dir"])
        .arg(&logs)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["games"].as_array().unwrap().len(), 6);
    assert!(report.with_extension("txt").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("strategy"));
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = placegame().args(["selfplay", "--matchup", "leader"]).output().unwrap();
    assert!(!out.status.success());
    let out = placegame().args(["analyze", "--log-dir", "/nonexistent/dir"]).output().unwrap();
    assert!(!out.status.success());
    let out = placegame().args(["analyze", "--log-dir", ".", "--length-unit", "bytes"]).output().unwrap();
    assert!(!out.status.success());
}
