use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/team4")
}

fn equiscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equiscope"))
        .args(args)
        .env_remove("EQUISCOPE_PROVIDER")
        .env_remove("EQUISCOPE_TOKEN")
        .output()
        .unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

#[test]
fn ingest_accepts_the_fixture() {
    let out = equiscope(&["ingest", "--bundle", &s(&fixture()), "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["roster_size"], 4);
    assert_eq!(v["unresolved_aliases"], json!([]));
    assert_eq!(v["issues"], json!([]));
}

#[test]
fn malformed_chat_line_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(), dir.path());
    let chat = dir.path().join("chat/messages.jsonl");
    let mut text = std::fs::read_to_string(&chat).unwrap();
    text.push_str("{not json\n");
    std::fs::write(&chat, text).unwrap();
    let out = equiscope(&["ingest", "--bundle", &s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("chat/messages.jsonl:25"), "{stderr}");
    // analysis refuses the same bundle unless told otherwise
    let report = dir.path().join("r.json");
    let out = equiscope(&["analyze", "--bundle", &s(dir.path()), "--out", &s(&report)]);
    assert_eq!(out.status.code(), Some(2));
    let out = equiscope(&["analyze", "--bundle", &s(dir.path()), "--out", &s(&report), "--allow-issues"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_manifest_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(), dir.path());
    std::fs::remove_file(dir.path().join("manifest.json")).unwrap();
    let out = equiscope(&["ingest", "--bundle", &s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(equiscope(&["analyze"]).status.code(), Some(1));
    assert_eq!(equiscope(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_names_the_mask() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"dimension_masks":{"role":{"adherence":0.5,"organisation":0.2,"support":0.2}}}"#).unwrap();
    let out = equiscope(&["analyze", "--bundle", &s(&fixture()), "--config", &s(&cfg), "--out", &s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension_masks.role"));
}

#[test]
fn synth_loafer_yields_its_marker() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles.json");
    std::fs::write(
        &profiles,
        r#"[{"student":"s1","archetype":"loafer"},{"student":"s2","archetype":"balanced"},{"student":"s3","archetype":"balanced"}]"#,
    )
    .unwrap();
    let bundle = dir.path().join("bundle");
    let out = equiscope(&["synth", "--profiles", &s(&profiles), "--seed", "42", "--out", &s(&bundle)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let labels: Value = serde_json::from_str(&std::fs::read_to_string(bundle.join("labels.json")).unwrap()).unwrap();
    assert_eq!(labels["expected_markers"], json!([{"benchmark": "quantity", "scenario": "B", "student": "s1"}]));
    let report = dir.path().join("r.json");
    let out = equiscope(&["analyze", "--bundle", &s(&bundle), "--provider", "none", "--out", &s(&report)]);
    assert!(out.status.success());
    let body: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let ids: Vec<&str> = body["analysis"]["conflict_markers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["marker:quantity:B:s1"]);
    assert_eq!(body["analysis"]["advisory"]["status"], "skipped");
    assert!(!dir.path().join("r.transcript.jsonl").exists());
}

#[test]
fn replayed_transcript_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let live = dir.path().join("live.json");
    let replayed = dir.path().join("replayed.json");
    assert!(equiscope(&["analyze", "--bundle", &s(&fixture()), "--provider", "mock", "--out", &s(&live)]).status.success());
    let out = equiscope(&[
        "analyze",
        "--bundle",
        &s(&fixture()),
        "--replay",
        &s(&dir.path().join("live.transcript.jsonl")),
        "--out",
        &s(&replayed),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&live).unwrap(), std::fs::read(&replayed).unwrap());
}

#[test]
fn report_renders_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    assert!(equiscope(&["analyze", "--bundle", &s(&fixture()), "--out", &s(&report)]).status.success());
    let text = equiscope(&["report", "--in", &s(&report)]);
    assert!(text.status.success());
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("Dev Patel (dev)"));
    assert!(text.contains("Role Support scenario A for ana"));
    let md = equiscope(&["report", "--in", &s(&report), "--format", "markdown"]);
    let md = String::from_utf8(md.stdout).unwrap();
    assert!(md.starts_with("# "), "{md}");
    assert!(md.contains('|'));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn archive(dir: &Path) -> Vec<u8> {
    let gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
    let mut tar = tar::Builder::new(gz);
    tar.append_dir_all("team4", dir).unwrap();
    tar.into_inner().unwrap().finish().unwrap()
}

fn get(url: &str) -> Value {
    ureq::get(url).call().unwrap().body_mut().read_json().unwrap()
}

#[test]
fn cli_and_service_write_identical_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let port = free_port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_equiscope"))
            .args(["serve", "--port", &port.to_string(), "--data-dir", &s(&data)])
            .env_remove("EQUISCOPE_TOKEN")
            .env_remove("EQUISCOPE_PROVIDER")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let base = format!("http://127.0.0.1:{port}");
    let deadline = Instant::now() + Duration::from_secs(20);
    while ureq::get(&format!("{base}/projects")).call().is_err() {
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    ureq::post(&format!("{base}/projects")).send_json(json!({"project_id": "team4"})).unwrap();
    let upload: Value = ureq::post(&format!("{base}/projects/team4/evidence"))
        .send(&archive(&fixture())[..])
        .unwrap()
        .body_mut()
        .read_json()
        .unwrap();
    assert_eq!(upload["valid"], true, "{upload}");
    let run: Value = ureq::post(&format!("{base}/projects/team4/runs"))
        .send_json(json!({"provider": "mock"}))
        .unwrap()
        .body_mut()
        .read_json()
        .unwrap();
    let run_id = run["run_id"].as_str().unwrap().to_string();
    loop {
        let r = get(&format!("{base}/runs/{run_id}"));
        if r["status"] == "complete" {
            break;
        }
        assert_ne!(r["status"], "failed", "{r}");
        assert!(Instant::now() < deadline, "run did not finish");
        std::thread::sleep(Duration::from_millis(50));
    }
    let served = get(&format!("{base}/runs/{run_id}/report"));

    let cli_report = dir.path().join("cli.json");
    assert!(equiscope(&["analyze", "--bundle", &s(&fixture()), "--provider", "mock", "--out", &s(&cli_report)]).status.success());
    let cli_bytes = std::fs::read(&cli_report).unwrap();
    let stored = std::fs::read(data.join(format!("runs/{run_id}/report.json"))).unwrap();
    assert_eq!(cli_bytes, stored);
    assert_eq!(serde_json::from_slice::<Value>(&cli_bytes).unwrap(), served["body"]);
}
