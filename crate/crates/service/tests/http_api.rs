mod common;

use std::collections::BTreeSet;
use std::fs;
use std::sync::Arc;
use std::thread;

use common::{campaign_corpus, load_over_http, open, request, TestServer};
use jarvis_core::model::{Review, CLOCK_SKEW_ALLOWANCE};
use jarvis_service::ApiOptions;
use serde_json::{json, Value};

fn review(id: &str, user: &str, text: &str) -> Value {
    json!({
        "review_id": id,
        "item_id": "item-1",
        "user_id": user,
        "text": text,
        "image_refs": [],
        "created_at": 1_735_689_600,
    })
}

#[test]
fn review_ingest_contract() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(open(dir.path()), ApiOptions::default());

    let r = review("r1", "u1", "The kettle boils fast and the lid seals well.");
    let (s, body) = server.post("/reviews", &r);
    assert_eq!(s, 201);
    assert_eq!(body["review_id"], "r1");
    assert_eq!(body["outcome"], "created");
    let (s, body) = server.post("/reviews", &r);
    assert_eq!((s, body["review_id"].as_str()), (200, Some("r1")));
    assert_eq!(body["outcome"], "unchanged");

    let mut changed = r.clone();
    changed["text"] = json!("Something else entirely.");
    let (s, body) = server.post("/reviews", &changed);
    assert_eq!((s, body["code"].as_str()), (409, Some("conflict")));

    let mut future = review("r2", "u2", "later");
    future["created_at"] = json!(jarvis_service::state::unix_now() + CLOCK_SKEW_ALLOWANCE + 3600);
    let (s, body) = server.post("/reviews", &future);
    assert_eq!((s, body["field"].as_str()), (400, Some("created_at")));

    let (s, body) = server.post(
        "/reviews",
        &json!({"review_id": "r3", "item_id": "i", "user_id": "u", "text": "", "created_at": 1}),
    );
    assert_eq!((s, body["field"].as_str()), (400, Some("text")));

    let (s, body) = server.post_raw("/reviews", "{not json");
    assert_eq!((s, body["code"].as_str()), (400, Some("invalid_body")));

    let (s, body) = server.post("/reviews", &json!({"review_id": "r4", "item_id": "i", "user_id": "u", "text": "pic", "image_refs": ["file:///missing.jpg"], "created_at": 1}));
    assert_eq!(
        (s, body["code"].as_str(), body["field"].as_str()),
        (400, Some("missing_image"), Some("image_refs"))
    );

    let (s, body) = server.get("/nowhere");
    assert_eq!((s, body["code"].as_str()), (404, Some("not_found")));
}

#[test]
fn thousand_reviews_give_a_thousand_indexed_records() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(dir.path());
    let server = TestServer::start(Arc::clone(&svc), ApiOptions::default());
    let corpus = jarvis_core::synth::generate_corpus(&jarvis_core::synth::CorpusSpec::benchmark(3, 4, 1000)).unwrap();
    let reviews: Vec<&Review> = corpus.reviews.iter().take(1000).collect();
    for r in &reviews {
        let (s, body) = server.post("/reviews", &serde_json::to_value(r).unwrap());
        assert_eq!(s, 201, "{body}");
    }
    let (_, health) = server.get("/health");
    assert_eq!(health["stats"]["indexed"], 1000);
    assert_eq!(health["stats"]["reviews"], 1000);
    assert_eq!(svc.engine().index().len(), 1000);
}

#[test]
fn isolated_review_and_unknown_review() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(open(dir.path()), ApiOptions::default());
    server.post(
        "/reviews",
        &review("solo", "u1", "Plain sturdy chair, comfortable enough for long days."),
    );
    let (s, case) = server.post("/adjudications", &json!({"review_id": "solo"}));
    assert_eq!(s, 201, "{case}");
    assert_eq!(case["case_id"], "case-000001");
    assert_eq!(case["adjudication"]["verdict"], "genuine");
    assert_eq!(case["adjudication"]["risk_level"], "low");
    let (_, graph) = server.get("/cases/case-000001/graph");
    let reviews = graph["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["kind"] == "review")
        .count();
    assert_eq!(reviews, 1);
    assert!(graph["edges"].as_array().unwrap().iter().all(|e| e["type"] != "rr"));

    let (s, body) = server.post("/adjudications", &json!({"review_id": "ghost"}));
    assert_eq!((s, body["code"].as_str()), (404, Some("not_found")));
    let (s, _) = server.get("/cases/case-999999");
    assert_eq!(s, 404);
    let (s, _) = server.get("/cases/case-999999/graph");
    assert_eq!(s, 404);
}

#[test]
fn campaign_case_round_trip_without_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(open(dir.path()), ApiOptions::default());
    let corpus = campaign_corpus(80);
    load_over_http(&server, &corpus);

    let colluder = corpus.deceptive_ids().next().unwrap().clone();
    let (s, case) = server.post("/adjudications", &json!({ "review_id": colluder }));
    assert_eq!(s, 201, "{case}");
    assert_eq!(case["adjudication"]["verdict"], "fraudulent");
    assert_eq!(case["adjudication"]["risk_level"], "high");
    let id = case["case_id"].as_str().unwrap();

    let (s, fetched) = server.get(&format!("/cases/{id}"));
    assert_eq!(s, 200);
    for field in [
        "case_id",
        "review",
        "graph",
        "evidence_paths",
        "adjudication",
        "timings",
        "opened_at",
    ] {
        assert!(!fetched[field].is_null(), "{field} missing");
    }
    assert_eq!(fetched, case);
    assert!(!fetched["adjudication"]["evidence_chains"]
        .as_array()
        .unwrap()
        .is_empty());

    let (_, graph) = server.get(&format!("/cases/{id}/graph"));
    assert_eq!(graph, case["graph"]);
    assert_eq!(graph["meta_review_id"], colluder.as_str());
    let device_reviews = graph["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["type"] == "re" && e["entity"]["entity_type"] == "device")
        .count();
    assert!(device_reviews >= 5, "{device_reviews}");

    for path in ["/cases", &format!("/cases/{id}"), &format!("/cases/{id}/graph")] {
        let (_, body) = server.get(path);
        let text = body.to_string();
        assert!(!text.contains("\"label\""), "{path} leaks labels");
        assert!(!text.contains("deceptive"), "{path} leaks labels");
    }
}

#[test]
fn decisions_and_adoption_rate() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(open(dir.path()), ApiOptions::default());
    let (_, adoption) = server.get("/metrics/adoption");
    assert_eq!(
        adoption,
        json!({"adopted": 0, "rejected": 0, "decided": 0, "rate": null})
    );

    for i in 0..4 {
        server.post(
            "/reviews",
            &review(
                &format!("r{i}"),
                &format!("u{i}"),
                &format!("Solid product number {i}, works as described."),
            ),
        );
        let (s, _) = server.post("/adjudications", &json!({"review_id": format!("r{i}")}));
        assert_eq!(s, 201);
    }
    for (case, decision) in [(1, "adopted"), (2, "adopted"), (3, "rejected"), (4, "rejected")] {
        let (s, body) = server.post(
            &format!("/cases/case-{case:06}/decision"),
            &json!({"decision": decision, "auditor_id": "a1"}),
        );
        assert_eq!(s, 200, "{body}");
        assert_eq!(body["history_length"], 1);
    }
    let (s, body) = server.post(
        "/cases/case-000004/decision",
        &json!({"decision": "adopted", "auditor_id": "a2", "note": "second look"}),
    );
    assert_eq!((s, body["history_length"].as_u64()), (200, Some(2)));

    let (_, adoption) = server.get("/metrics/adoption");
    assert_eq!(adoption["rate"], 0.75);
    assert_eq!(adoption["decided"], 4);

    let (_, case) = server.get("/cases/case-000004");
    assert_eq!(case["decision"]["decision"], "adopted");
    assert_eq!(case["decision_history"].as_array().unwrap().len(), 2);

    let (s, body) = server.post(
        "/cases/case-000001/decision",
        &json!({"decision": "maybe", "auditor_id": "a1"}),
    );
    assert_eq!((s, body["field"].as_str()), (400, Some("decision")));
    let (s, body) = server.post(
        "/cases/case-000001/decision",
        &json!({"decision": "adopted", "auditor_id": " "}),
    );
    assert_eq!((s, body["field"].as_str()), (400, Some("auditor_id")));
    let (s, _) = server.post(
        "/cases/case-000042/decision",
        &json!({"decision": "adopted", "auditor_id": "a1"}),
    );
    assert_eq!(s, 404);
}

#[test]
fn everything_committed_survives_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = campaign_corpus(40);
    let (before_case, before_adoption, before_health) = {
        let server = TestServer::start(open(dir.path()), ApiOptions::default());
        load_over_http(&server, &corpus);
        let colluder = corpus.deceptive_ids().next().unwrap();
        let (_, case) = server.post("/adjudications", &json!({ "review_id": colluder }));
        server.post(
            "/cases/case-000001/decision",
            &json!({"decision": "adopted", "auditor_id": "a1"}),
        );
        let (_, case) = server.get(&format!("/cases/{}", case["case_id"].as_str().unwrap()));
        let (_, adoption) = server.get("/metrics/adoption");
        let (_, health) = server.get("/health");
        server.stop();
        (case, adoption, health)
    };
    let server = TestServer::start(open(dir.path()), ApiOptions::default());
    assert_eq!(server.get("/cases/case-000001").1, before_case);
    assert_eq!(server.get("/metrics/adoption").1, before_adoption);
    assert_eq!(server.get("/health").1, before_health);
    let (_, next) = server.post("/adjudications", &json!({ "review_id": corpus.reviews[0].review_id }));
    assert_eq!(next["case_id"], "case-000002");
}

#[test]
fn bearer_token_guards_the_api_but_not_health() {
    let dir = tempfile::tempdir().unwrap();
    let opts = ApiOptions {
        bearer_token: Some("s3cret".into()),
        console_dir: None,
    };
    let server = TestServer::start(open(dir.path()), opts);
    let url = format!("{}/metrics/adoption", server.base);
    let (s, body) = request("GET", &url, None, None);
    assert_eq!((s, body["code"].as_str()), (401, Some("unauthorized")));
    assert_eq!(request("GET", &url, None, Some("wrong")).0, 401);
    assert_eq!(request("GET", &url, None, Some("s3cret")).0, 200);
    let r = review("r1", "u1", "fine").to_string();
    assert_eq!(
        request("POST", &format!("{}/reviews", server.base), Some(r), Some("s3cret")).0,
        201
    );
    assert_eq!(server.get("/health").0, 200);
}

#[test]
fn console_assets_are_served_when_present() {
    let data = tempfile::tempdir().unwrap();
    let assets = tempfile::tempdir().unwrap();
    fs::write(assets.path().join("index.html"), "<h1>console</h1>").unwrap();
    let server = TestServer::start(
        open(data.path()),
        ApiOptions {
            bearer_token: None,
            console_dir: Some(assets.path().to_path_buf()),
        },
    );
    let (s, body) = server.get("/console/index.html");
    assert_eq!((s, body.as_str()), (200, Some("<h1>console</h1>")));
    let (s, body) = server.get("/console/");
    assert_eq!((s, body.as_str()), (200, Some("<h1>console</h1>")));
    drop(server);

    let server = TestServer::start(open(tempfile::tempdir().unwrap().path()), ApiOptions::default());
    let (s, body) = server.get("/console/index.html");
    assert_eq!((s, body["code"].as_str()), (404, Some("console_not_built")));
}

#[test]
fn concurrent_adjudications_get_distinct_cases() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(open(dir.path()), ApiOptions::default());
    let corpus = campaign_corpus(30);
    load_over_http(&server, &corpus);
    let ids: Vec<String> = corpus.reviews.iter().take(12).map(|r| r.review_id.clone()).collect();
    let base = server.base.clone();
    let handles: Vec<_> = ids
        .into_iter()
        .map(|id| {
            let url = format!("{base}/adjudications");
            thread::spawn(move || request("POST", &url, Some(json!({ "review_id": id }).to_string()), None))
        })
        .collect();
    let mut case_ids = BTreeSet::new();
    for h in handles {
        let (s, case) = h.join().unwrap();
        assert_eq!(s, 201, "{case}");
        case_ids.insert(case["case_id"].as_str().unwrap().to_string());
    }
    assert_eq!(case_ids.len(), 12);
    assert_eq!(server.get("/cases").1.as_array().unwrap().len(), 12);
}

#[test]
fn behaviors_accept_one_or_many_and_validate_shape() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(open(dir.path()), ApiOptions::default());
    let one = json!({"subject": {"entity": {"entity_type": "user", "entity_id": "u1"}}, "relation": "logged_in_from", "object": {"entity": {"entity_type": "device", "entity_id": "d1"}}, "observed_at": 5});
    let (s, body) = server.post("/behaviors", &one);
    assert_eq!((s, body["added"].as_u64()), (201, Some(1)));
    let (s, body) = server.post("/behaviors", &json!([one]));
    assert_eq!((s, body["duplicates"].as_u64()), (200, Some(1)));
    let bad = json!({"subject": {"entity": {"entity_type": "device", "entity_id": "d1"}}, "relation": "posted", "object": {"review": "r1"}, "observed_at": 5});
    let (s, body) = server.post("/behaviors", &bad);
    assert_eq!(s, 400, "{body}");
}
