use std::path::Path;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use equiscope_core::context::LabelMap;
use equiscope_core::measures::WeightConfig;
use equiscope_core::pipeline::run_analysis;
use equiscope_core::provider::mock::MockProvider;
use equiscope_core::provider::{Session, Transcript};
use equiscope_core::synth::{default_window, generate, team_with, write_synth, Archetype};
use equiscope_service::{open_state, router, AppState, TOKEN_HEADER};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn archive(dir: &Path) -> Vec<u8> {
    let gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
    let mut tar = tar::Builder::new(gz);
    tar.append_dir_all("bundle", dir).unwrap();
    tar.into_inner().unwrap().finish().unwrap()
}

fn loafer_archive() -> (Vec<u8>, equiscope_core::evidence::EvidenceBundle) {
    let out = generate(&team_with(Archetype::Loafer, 2), 11, default_window()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_synth(&out, dir.path()).unwrap();
    (archive(dir.path()), out.bundle)
}

struct Api {
    state: AppState,
    token: Option<&'static str>,
}

impl Api {
    fn new(data: &Path) -> Self {
        Self {
            state: open_state(data, None).unwrap(),
            token: None,
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Body) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = self.token {
            req = req.header(TOKEN_HEADER, t);
        }
        let res = router(self.state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn json(&self, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
        let mut req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json");
        if let Some(t) = self.token {
            req = req.header(TOKEN_HEADER, t);
        }
        let res = router(self.state.clone())
            .oneshot(req.body(Body::from(body.to_string())).unwrap())
            .await
            .unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn wait(&self, run_id: &str) -> Value {
        for _ in 0..600 {
            let (_, run) = self.call("GET", &format!("/runs/{run_id}"), Body::empty()).await;
            if run["status"] == "complete" || run["status"] == "failed" {
                return run;
            }
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
        panic!("run {run_id} did not finish");
    }

    async fn project_with_bundle(&self, id: &str) -> Value {
        let (s, _) = self.json("POST", "/projects", json!({"project_id": id})).await;
        assert_eq!(s, StatusCode::CREATED);
        let (s, v) = self
            .call("POST", &format!("/projects/{id}/evidence"), Body::from(loafer_archive().0))
            .await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn projects_reject_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let (s, v) = api.json("POST", "/projects", json!({"project_id": "p1", "course": "x"})).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["project_id"], "p1");
    let (s, _) = api.json("POST", "/projects", json!({"project_id": "p1"})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = api.json("POST", "/projects", json!({"project_id": "../etc"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, list) = api.call("GET", "/projects", Body::empty()).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["manifest"]["course"], "x");
}

#[tokio::test(flavor = "multi_thread")]
async fn evidence_is_validated_and_content_addressed() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let v = api.project_with_bundle("p").await;
    assert_eq!(v["valid"], true);
    assert_eq!(v["roster_size"], 3);
    let version = v["version"].as_str().unwrap().to_string();
    // same evidence again: same version, not duplicated
    let (s, again) = api.call("POST", "/projects/p/evidence", Body::from(loafer_archive().0)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(again["version"], version.as_str());
    let (_, project) = api.call("GET", "/projects/p", Body::empty()).await;
    assert_eq!(project["bundle_versions"].as_array().unwrap().len(), 1);
    assert!(dir.path().join("projects/p/bundles").join(&version).join("manifest.json").is_file());

    let (s, _) = api.call("POST", "/projects/p/evidence", Body::from("not an archive")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = api.call("POST", "/projects/nope/evidence", Body::from(loafer_archive().0)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_records_are_listed_and_version_marked_invalid() {
    let out = generate(&team_with(Archetype::Balanced, 2), 1, default_window()).unwrap();
    let bundle = tempfile::tempdir().unwrap();
    write_synth(&out, bundle.path()).unwrap();
    let chat = bundle.path().join("chat/messages.jsonl");
    let mut text = std::fs::read_to_string(&chat).unwrap();
    text.push_str("{broken\n");
    std::fs::write(&chat, text).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.json("POST", "/projects", json!({"project_id": "p"})).await;
    let (s, v) = api.call("POST", "/projects/p/evidence", Body::from(archive(bundle.path()))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["valid"], false);
    assert_eq!(v["issues"][0]["file"], "chat/messages.jsonl");
    // no valid version: a run cannot start
    let (s, _) = api.json("POST", "/projects/p/runs", json!({})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_config_is_rejected_before_enqueue() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.project_with_bundle("p").await;
    let bad = json!({"config": {"benchmark_masks": {"tone": {"2i": 0.9}}}});
    let (s, v) = api.json("POST", "/projects/p/runs", bad).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["issues"][0]["path"], "benchmark_masks.tone");
    let (_, runs) = api.call("GET", "/projects/p/runs", Body::empty()).await;
    assert!(runs.as_array().unwrap().is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn run_completes_and_matches_the_engine() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.project_with_bundle("p").await;
    let (s, run) = api.json("POST", "/projects/p/runs", json!({"provider": "mock"})).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(run["status"], "pending");
    let id = run["run_id"].as_str().unwrap().to_string();
    let done = api.wait(&id).await;
    assert_eq!(done["status"], "complete", "{done}");
    assert!(done["started_at"].as_str().unwrap() >= done["created_at"].as_str().unwrap());
    assert!(done["completed_at"].as_str().unwrap() >= done["started_at"].as_str().unwrap());

    let (s, report) = api.call("GET", &format!("/runs/{id}/report"), Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(report["run"]["run_id"], id.as_str());
    let markers = report["body"]["analysis"]["conflict_markers"].as_array().unwrap();
    assert_eq!(markers.len(), 1);
    assert_eq!(markers[0]["id"], "marker:quantity:B:s1");

    let bundle = loafer_archive().1;
    let mock = MockProvider::new(0);
    let t = Transcript::in_memory();
    let direct = run_analysis(&bundle, &WeightConfig::default(), &LabelMap::shipped(), Some(&Session::new(&mock, &t)));
    let stored = std::fs::read_to_string(dir.path().join("runs").join(&id).join("report.json")).unwrap();
    assert_eq!(stored, direct.to_canonical_json());
    let transcript = std::fs::read_to_string(dir.path().join("runs").join(&id).join("transcript.jsonl")).unwrap();
    assert_eq!(transcript.lines().count(), t.len());
}

#[tokio::test(flavor = "multi_thread")]
async fn runs_of_one_project_execute_in_submission_order() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.project_with_bundle("p").await;
    let mut ids = Vec::new();
    for g in [0.3, 0.31, 0.32, 0.33] {
        let (s, run) = api
            .json("POST", "/projects/p/runs", json!({"config": {"gini_threshold": g}, "provider": "none"}))
            .await;
        assert_eq!(s, StatusCode::ACCEPTED);
        ids.push(run["run_id"].as_str().unwrap().to_string());
    }
    let mut finished = Vec::new();
    for id in &ids {
        finished.push(api.wait(id).await);
    }
    for pair in finished.windows(2) {
        let prev_done = pair[0]["completed_at"].as_str().unwrap();
        let next_start = pair[1]["started_at"].as_str().unwrap();
        assert!(prev_done <= next_start, "{prev_done} > {next_start}");
    }
    let (_, runs) = api.call("GET", "/projects/p/runs", Body::empty()).await;
    let listed: Vec<&str> = runs.as_array().unwrap().iter().map(|r| r["run_id"].as_str().unwrap()).collect();
    assert_eq!(listed, ids.iter().map(String::as_str).collect::<Vec<_>>());
}

#[tokio::test(flavor = "multi_thread")]
async fn what_if_runs_start_from_a_prior_run() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.project_with_bundle("p").await;
    let (_, base) = api.json("POST", "/projects/p/runs", json!({"provider": "none"})).await;
    let base_id = base["run_id"].as_str().unwrap().to_string();
    api.wait(&base_id).await;
    let (_, report) = api.call("GET", &format!("/runs/{base_id}/report"), Body::empty()).await;
    let g = report["body"]["analysis"]["conflict_markers"][0]["gini"].as_f64().unwrap();

    let (s, what_if) = api
        .json(
            "POST",
            "/projects/p/runs",
            json!({"base_run": base_id, "provider": "none", "config": {"gini_threshold": (g + 0.01).min(0.99)}}),
        )
        .await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(what_if["bundle_version"], base["bundle_version"]);
    let id = what_if["run_id"].as_str().unwrap().to_string();
    api.wait(&id).await;
    let (_, report) = api.call("GET", &format!("/runs/{id}/report"), Body::empty()).await;
    assert!(report["body"]["analysis"]["conflict_markers"].as_array().unwrap().is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn review_is_kept_beside_the_immutable_body() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.project_with_bundle("p").await;
    let (_, run) = api.json("POST", "/projects/p/runs", json!({"provider": "none"})).await;
    let id = run["run_id"].as_str().unwrap().to_string();
    api.wait(&id).await;
    let before = std::fs::read(dir.path().join("runs").join(&id).join("report.json")).unwrap();
    let (s, _) = api
        .json(
            "POST",
            &format!("/runs/{id}/review"),
            json!({"reviewed": true, "annotation": "spoke with the team",
                   "override": {"target": "marker:quantity:B:s1", "value": "dismissed", "author": "instructor"}}),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    let (_, report) = api.call("GET", &format!("/runs/{id}/report"), Body::empty()).await;
    assert_eq!(report["run"]["review"]["reviewed"], true);
    assert_eq!(report["run"]["review"]["annotation"], "spoke with the team");
    assert_eq!(report["run"]["review"]["overrides"][0]["target"], "marker:quantity:B:s1");
    let after = std::fs::read(dir.path().join("runs").join(&id).join("report.json")).unwrap();
    assert_eq!(before, after);
}

#[tokio::test(flavor = "multi_thread")]
async fn report_of_unfinished_or_unknown_run() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let (s, _) = api.call("GET", "/runs/run-000009/report", Body::empty()).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = api.call("GET", "/runs/run-000009", Body::empty()).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn shared_token_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let mut api = Api {
        state: open_state(dir.path(), Some("s3cret".into())).unwrap(),
        token: None,
    };
    let (s, _) = api.call("GET", "/projects", Body::empty()).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    api.token = Some("s3cret");
    let (s, _) = api.call("GET", "/projects", Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
}
