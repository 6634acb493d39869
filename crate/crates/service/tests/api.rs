use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use trace_forge::eval::{synth_project, SynthParams};
use trace_forge::features::{AttributeSet, CandidateConfig};
use trace_forge::learn::ClassifierKind;
use trace_forge::model::{load_project, save_project, write_json, IssueKind, LinkOrigin};
use trace_forge::pipeline::{batch_path, review_batch, train_and_save, Recommender, TrainingConfig};
use trace_forge_service::{router, AppState, ServiceConfig};

struct Fixture {
    dir: tempfile::TempDir,
    app: Router,
    key: String,
}

fn fixture(trained: bool) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let params = SynthParams {
        n_issues: 120,
        n_commits: 240,
        ..SynthParams::default()
    };
    let (store, _) = synth_project(3, &params).unwrap().ingest().unwrap();
    save_project(&store, dir.path()).unwrap();
    if trained {
        let mut cfg = TrainingConfig::new(ClassifierKind::RandomForest);
        cfg.repetitions = 2;
        cfg.classifier.forest.trees = 10;
        train_and_save(&store, dir.path(), AttributeSet::All, &IssueKind::ALL, &cfg).unwrap();
        let rec = Recommender::load(dir.path(), AttributeSet::All, ClassifierKind::RandomForest, CandidateConfig::default())
            .unwrap();
        let batch = review_batch(&store, &rec, "b1", 5, false).unwrap();
        std::fs::create_dir_all(dir.path().join("batches")).unwrap();
        write_json(&batch_path(dir.path(), "b1"), &batch).unwrap();
    }
    let state = AppState::open(dir.path(), ServiceConfig::default()).unwrap();
    Fixture {
        app: router(state),
        key: store.project_key.clone(),
        dir,
    }
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn verdict(app: &Router, key: &str, rater: Option<&str>, hash: &str, issue: &str, decision: &str) -> (StatusCode, Value) {
    let mut req = Request::post(format!("/api/projects/{key}/verdicts")).header("content-type", "application/json");
    if let Some(r) = rater {
        req = req.header("x-rater-id", r);
    }
    let body = json!({ "commit_hash": hash, "issue_key": issue, "decision": decision }).to_string();
    call(app, req.body(Body::from(body)).unwrap()).await
}

async fn batch_pairs(f: &Fixture) -> Vec<(String, String)> {
    let (_, body) = get(&f.app, &format!("/api/projects/{}/review-batches/b1", f.key)).await;
    body["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["commit_hash"].as_str().unwrap().to_string(), e["issue_key"].as_str().unwrap().to_string()))
        .collect()
}

#[tokio::test]
async fn recommendations_are_ranked_and_truncated() {
    let f = fixture(true);
    let store = load_project(f.dir.path()).unwrap();
    let mut seen_full = false;
    for hash in store.commits.keys().take(60) {
        let (status, body) = get(&f.app, &format!("/api/projects/{}/commits/{hash}/recommendations?k=3", f.key)).await;
        assert_eq!(status, StatusCode::OK);
        let list = body["recommendations"].as_array().unwrap();
        assert!(list.len() <= 3);
        seen_full |= list.len() == 3;
        for w in list.windows(2) {
            let (a, b) = (w[0]["score"].as_f64().unwrap(), w[1]["score"].as_f64().unwrap());
            assert!(a > b || (a == b && w[0]["issue_key"].as_str() < w[1]["issue_key"].as_str()));
        }
        assert_eq!(body["model"]["kind"], "RandomForest");
    }
    assert!(seen_full);

    let hash = store.commits.keys().next().unwrap();
    let uri = format!("/api/projects/{}/commits/{hash}/recommendations", f.key);
    assert_eq!(get(&f.app, &uri).await, get(&f.app, &uri).await);
    let (status, _) = get(&f.app, &format!("/api/projects/{}/commits/0000/recommendations", f.key)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&f.app, &format!("/api/projects/NOPE/commits/{hash}/recommendations")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&f.app, &format!("{uri}?k=0")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn recommendations_without_a_model_conflict() {
    let f = fixture(false);
    let store = load_project(f.dir.path()).unwrap();
    let hash = store.commits.keys().next().unwrap();
    let (status, body) = get(&f.app, &format!("/api/projects/{}/commits/{hash}/recommendations", f.key)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("no trained"));
}

#[tokio::test]
async fn review_batch_is_blind() {
    let f = fixture(true);
    let uri = format!("/api/projects/{}/review-batches/b1", f.key);
    let (status, body) = get(&f.app, &uri).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["entries"].as_array().unwrap().len(), 20);
    let text = body.to_string();
    assert!(!text.contains("\"group\"") && !text.contains("\"score\""));
    assert!(body["entries"][0]["commit_message"].is_string());
    assert_eq!(get(&f.app, &uri).await.1, body);
    let (status, _) = get(&f.app, &format!("/api/projects/{}/review-batches/zz", f.key)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&f.app, &format!("/api/projects/{}/review-batches/..%2Fmeta", f.key)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn verdicts_become_links() {
    let f = fixture(true);
    let pairs = batch_pairs(&f).await;
    let (h, k) = &pairs[0];
    let (status, body) = verdict(&f.app, &f.key, Some("ann"), h, k, "accept").await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["origin"], "HumanAccepted");
    let store = load_project(f.dir.path()).unwrap();
    assert!(store.pairs_with_origin(LinkOrigin::HumanAccepted).contains(&(h.clone(), k.clone())));

    let (status, _) = verdict(&f.app, &f.key, Some("ann"), h, k, "reject").await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = verdict(&f.app, &f.key, None, h, k, "accept").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = verdict(&f.app, &f.key, Some("ann"), h, "SYN-99999", "accept").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (h2, k2) = &pairs[1];
    let (status, body) = verdict(&f.app, &f.key, Some("bob"), h2, k2, "reject").await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["origin"], "HumanRejected");
    let store = load_project(f.dir.path()).unwrap();
    assert_eq!(store.is_linked(h2, k2).unwrap(), store.links.iter().any(|l| &l.commit_hash == h2 && &l.issue_key == k2 && l.origin.is_positive()));

    let (status, stats) = get(&f.app, &format!("/api/projects/{}/stats", f.key)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["links_by_origin"]["HumanAccepted"], 1);
    assert_eq!(stats["links_by_origin"]["HumanRejected"], 1);
}

#[tokio::test]
async fn pair_outside_candidates_and_batches_is_unknown() {
    let f = fixture(true);
    let store = load_project(f.dir.path()).unwrap();
    let cfg = CandidateConfig::default();
    let (h, k) = store
        .commits
        .values()
        .flat_map(|c| store.issues.values().map(move |i| (c, i)))
        .find(|(c, i)| !trace_forge::features::is_candidate(c, i, &cfg))
        .map(|(c, i)| (c.hash.clone(), i.key.clone()))
        .unwrap();
    let (status, _) = verdict(&f.app, &f.key, Some("ann"), &h, &k, "accept").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn kappa_follows_the_raters() {
    let f = fixture(true);
    let pairs = batch_pairs(&f).await;
    let uri = format!("/api/projects/{}/kappa?batch=b1", f.key);
    let (status, _) = get(&f.app, &uri).await;
    assert_eq!(status, StatusCode::CONFLICT);

    for (i, (h, k)) in pairs.iter().enumerate() {
        let d = if i % 2 == 0 { "accept" } else { "reject" };
        assert_eq!(verdict(&f.app, &f.key, Some("ann"), h, k, d).await.0, StatusCode::CREATED);
        assert_eq!(verdict(&f.app, &f.key, Some("bob"), h, k, d).await.0, StatusCode::CREATED);
    }
    let (status, body) = get(&f.app, &uri).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["kappa"], 1.0);
    assert_eq!(body["raters"], 2);
    assert_eq!(body["items"], 20);

    // a third rater who flips every decision lowers agreement below zero
    for (i, (h, k)) in pairs.iter().enumerate() {
        let d = if i % 2 == 0 { "reject" } else { "accept" };
        verdict(&f.app, &f.key, Some("cy"), h, k, d).await;
    }
    let (_, body) = get(&f.app, &uri).await;
    assert_eq!(body["raters"], 3);
    assert!((body["kappa"].as_f64().unwrap() - (-1.0 / 3.0)).abs() < 1e-9);
}

#[tokio::test]
async fn cors_is_enabled() {
    let f = fixture(false);
    let req = Request::get(format!("/api/projects/{}/stats", f.key))
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let res = f.app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert!(res.headers().contains_key("access-control-allow-origin"));
}

#[test]
fn state_requires_an_archive() {
    let dir = tempfile::tempdir().unwrap();
    assert!(AppState::open(dir.path(), ServiceConfig::default()).is_err());
}
