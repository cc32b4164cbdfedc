use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use rulerank_core::corpus::{Scenario, Taxonomy, TransactionSet};
use rulerank_core::miner::TargetSet;
use rulerank_core::pipeline::{mine_and_score, resolve_targets, TargetSpec};
use rulerank_core::rankcorr::{correlation_matrix, Aggregation, Method};
use rulerank_core::rules::{Measure, ScoredRuleTable, REVIEW_MEASURES};
use rulerank_service::{router, AppState, Dataset, SESSION_HEADER};

fn table() -> ScoredRuleTable {
    let ts = TransactionSet::from_labels(
        Scenario::ProductReceipt,
        [
            vec!["a", "b", "c", "x", "y"],
            vec!["a", "c", "y"],
            vec!["a", "b", "x", "y"],
            vec!["b", "c", "x", "y"],
        ],
    )
    .unwrap();
    let ids = resolve_targets(&ts, &TargetSpec::Labels(vec!["x".into(), "y".into()])).unwrap();
    mine_and_score(&ts, &TargetSet::new(ids, 2).unwrap()).unwrap()
}

fn taxonomy() -> Taxonomy {
    Taxonomy::from_edges(
        [
            ("x", "k1"),
            ("a", "k1"),
            ("b", "k1"),
            ("y", "k2"),
            ("c", "k2"),
            ("k1", "top"),
            ("k2", "top"),
        ],
        4,
    )
    .unwrap()
}

fn app() -> axum::Router {
    router(Arc::new(AppState::loaded(Dataset::new(table(), Some(taxonomy())))))
}

async fn call(app: &axum::Router, method: &str, uri: &str, session: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(s) = session {
        req = req.header(SESSION_HEADER, s);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn get(app: &axum::Router, uri: &str, session: Option<&str>) -> (StatusCode, Value) {
    call(app, "GET", uri, session, None).await
}

async fn blinded_session(app: &axum::Router) -> String {
    let (status, v) = call(app, "POST", "/session", None, Some(json!({ "blinded": true }))).await;
    assert_eq!(status, StatusCode::OK);
    v["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn not_loaded_is_503() {
    let app = router(Arc::new(AppState::new()));
    for uri in ["/targets", "/measures", "/groups", "/rules?target=x&measure=Lift", "/correlation", "/dendrogram"] {
        assert_eq!(get(&app, uri, None).await.0, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
    }
}

#[tokio::test]
async fn catalogs() {
    let app = app();
    let (s, v) = get(&app, "/targets", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["targets"], json!([{ "label": "x", "rules": 3 }, { "label": "y", "rules": 6 }]));
    let (_, v) = get(&app, "/measures", None).await;
    let labels: Vec<&str> = v["measures"].as_array().unwrap().iter().map(|m| m["label"].as_str().unwrap()).collect();
    assert_eq!(labels, Measure::names());
    let (s, v) = get(&app, "/groups", None).await;
    assert_eq!(s, StatusCode::OK);
    let members: usize = v["computed"].as_array().unwrap().iter().map(|g| g["members"].as_array().unwrap().len()).sum();
    assert_eq!(members, 34);
    assert_eq!(v["reference"].as_array().unwrap().len(), 7);
}

#[tokio::test]
async fn blinded_sessions_hide_names() {
    let app = app();
    let id = blinded_session(&app).await;
    let (_, v) = get(&app, "/measures", Some(&id)).await;
    let labels: Vec<&str> = v["measures"].as_array().unwrap().iter().map(|m| m["label"].as_str().unwrap()).collect();
    assert_eq!(labels, vec!["A", "B", "C", "D", "E", "F"]);

    let mut payloads = vec![v.to_string()];
    for label in &labels {
        for target in ["x", "y"] {
            let (s, v) = get(&app, &format!("/rules?target={target}&measure={label}"), Some(&id)).await;
            assert_eq!(s, StatusCode::OK);
            payloads.push(v.to_string());
        }
    }
    for uri in ["/groups", "/correlation", "/dendrogram"] {
        let (s, v) = get(&app, uri, Some(&id)).await;
        assert_eq!(s, StatusCode::FORBIDDEN);
        payloads.push(v.to_string());
    }
    let (s, v) = get(&app, "/rules?target=x&measure=Lift", Some(&id)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    payloads.push(v.to_string());
    for p in &payloads {
        for m in Measure::ALL {
            assert!(!p.contains(m.name()), "{} leaked in {p}", m.name());
        }
    }

    // Each letter maps onto a different review measure, stable for the session.
    let mut seen = Vec::new();
    for label in &labels {
        let (_, a) = get(&app, &format!("/rules?target=y&measure={label}&limit=100"), Some(&id)).await;
        let (_, b) = get(&app, &format!("/rules?target=y&measure={label}&limit=100"), Some(&id)).await;
        assert_eq!(a, b);
        seen.push(a);
    }
    assert_eq!(seen.len(), REVIEW_MEASURES.len());
}

#[tokio::test]
async fn session_errors() {
    let app = app();
    assert_eq!(get(&app, "/measures", Some("nope")).await.0, StatusCode::BAD_REQUEST);
    let unknown = "00000000-0000-4000-8000-000000000000";
    assert_eq!(get(&app, "/measures", Some(unknown)).await.0, StatusCode::NOT_FOUND);
    let (s, v) = call(&app, "POST", "/session", None, Some(json!({ "blinded": false }))).await;
    assert_eq!(s, StatusCode::OK);
    let id = v["session_id"].as_str().unwrap();
    assert_eq!(get(&app, "/measures", Some(id)).await.1["measures"].as_array().unwrap().len(), 34);
}

#[tokio::test]
async fn rules_are_ranked_and_paginated() {
    let app = app();
    let t = table();
    let (s, all) = get(&app, "/rules?target=y&measure=Lift&limit=100", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(all["total"], 6);
    let items = all["items"].as_array().unwrap();
    let lifts: Vec<f64> = items
        .iter()
        .map(|it| {
            let ante: Vec<String> = serde_json::from_value(it["antecedent"].clone()).unwrap();
            t.rows().iter().find(|r| r.consequent == "y" && r.antecedent == ante).unwrap().score(Measure::Lift)
        })
        .collect();
    assert!(lifts.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(items[0]["rank"], 1);
    for key in ["support", "confidence", "recall", "consequent"] {
        assert!(items[0].get(key).is_some());
    }

    let mut pages = Vec::new();
    for off in (0..6).step_by(4) {
        let (_, p) = get(&app, &format!("/rules?target=y&measure=Lift&limit=4&offset={off}"), None).await;
        pages.extend(p["items"].as_array().unwrap().clone());
    }
    assert_eq!(&pages, items);

    let (_, top) = get(&app, "/rules?target=y&measure=Lift&limit=2", None).await;
    assert_eq!(top["items"].as_array().unwrap(), &items[..2]);
    let (_, tail) = get(&app, "/rules?target=y&measure=Lift&offset=-2", None).await;
    assert_eq!(tail["offset"], 4);
    assert_eq!(tail["items"].as_array().unwrap(), &items[4..]);
    let (_, past) = get(&app, "/rules?target=y&measure=Lift&offset=50", None).await;
    assert_eq!(past["total"], 6);
    assert!(past["items"].as_array().unwrap().is_empty());

    assert_eq!(get(&app, "/rules?target=zz&measure=Lift", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/rules?target=y&measure=Bogus", None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn same_category_filter() {
    let app = app();
    let tax = taxonomy();
    for target in ["x", "y"] {
        let (_, all) = get(&app, &format!("/rules?target={target}&measure=Cosine&limit=100"), None).await;
        let (_, filtered) = get(&app, &format!("/rules?target={target}&measure=Cosine&same_category=true&limit=100"), None).await;
        let parent = tax.parent_of(target);
        let want: Vec<Value> = all["items"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|it| {
                it["antecedent"].as_array().unwrap().iter().all(|a| tax.parent_of(a.as_str().unwrap()) == parent)
            })
            .cloned()
            .collect();
        let got: Vec<Value> = filtered["items"]
            .as_array()
            .unwrap()
            .iter()
            .map(|it| {
                let mut it = it.clone();
                it.as_object_mut().unwrap().remove("rank");
                it
            })
            .collect();
        let want: Vec<Value> = want
            .into_iter()
            .map(|mut it| {
                it.as_object_mut().unwrap().remove("rank");
                it
            })
            .collect();
        assert_eq!(got, want);
        assert_eq!(filtered["total"], want.len());
    }
    // x: {b}->x and {a,b}->x stay, {b,c}->x goes.
    let (_, x) = get(&app, "/rules?target=x&measure=Cosine&same_category=true", None).await;
    assert_eq!(x["total"], 2);

    let bare = router(Arc::new(AppState::loaded(Dataset::new(table(), None))));
    assert_eq!(
        get(&bare, "/rules?target=x&measure=Lift&same_category=true", None).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn comparison_payloads() {
    let app = app();
    let (s, v) = get(&app, "/correlation?method=ndcc", None).await;
    assert_eq!(s, StatusCode::OK);
    let want = correlation_matrix(&table(), Method::Ndcc, Aggregation::PerTarget).unwrap();
    assert_eq!(v, want.to_json());
    let values = v["values"].as_array().unwrap();
    assert_eq!(values.len(), 34);
    for i in 0..34 {
        for j in 0..34 {
            assert_eq!(values[i][j], values[j][i]);
        }
    }
    let (s, v) = get(&app, "/correlation?method=overlap&k=2&aggregation=pooled", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["method"], "overlap@2");
    assert_eq!(v["aggregation"], "pooled");

    let (s, v) = get(&app, "/dendrogram?method=kendall", None).await;
    assert_eq!(s, StatusCode::OK);
    fn leaves(v: &Value) -> usize {
        match v {
            Value::String(_) => 1,
            _ => leaves(&v["left"]) + leaves(&v["right"]),
        }
    }
    assert_eq!(leaves(&v["tree"]), 34);

    assert_eq!(get(&app, "/correlation?method=pearson", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/dendrogram?method=nope", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/correlation?aggregation=nope", None).await.0, StatusCode::BAD_REQUEST);
}
