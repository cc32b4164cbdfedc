use std::fs;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use rulerank_cli::{compare, CompareArgs};
use rulerank_core::rankcorr::{Aggregation, Method};
use rulerank_core::rules::{ScoredRule, ScoredRuleTable};
use rulerank_service::{router, AppState, Dataset};

#[tokio::test]
async fn service_matrix_equals_cli_file() {
    let rows = (0..12)
        .map(|i| {
            let a = 10 + 7 * i as u64;
            ScoredRule::from_counts(vec![format!("p{i}")], ["x", "y"][i % 2].into(), a, 50, a.min(50) / 2 + 1, 400)
                .unwrap()
        })
        .collect();
    let table = ScoredRuleTable::new(None, rows).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scored.csv");
    table.write_csv(fs::File::create(&path).unwrap()).unwrap();
    compare(&CompareArgs {
        scored: path.clone(),
        method: vec![Method::Ndcc],
        aggregation: Aggregation::PerTarget,
        k: None,
        theta: 0.9,
        out: dir.path().join("cmp"),
    })
    .unwrap();
    let file = fs::read_to_string(dir.path().join("cmp/matrix-ndcc.json")).unwrap();

    let loaded = ScoredRuleTable::read_csv(fs::File::open(&path).unwrap(), "scored").unwrap();
    let app = router(Arc::new(AppState::loaded(Dataset::new(loaded, None))));
    let resp = app
        .oneshot(Request::get("/correlation?method=ndcc").body(Body::empty()).unwrap())
        .await
        .unwrap();
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(std::str::from_utf8(&body).unwrap(), file.trim_end());
}
