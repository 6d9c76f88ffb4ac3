use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sgen_cli::server::{router, AppState, ServerConfig};

fn config() -> ServerConfig {
    serde_json::from_value(json!({
        "datasets": [
            {"name": "credit", "source": "synthetic", "generator": "credit", "rows": 300, "seed": 1},
            {"name": "adult", "source": "synthetic", "generator": "adult", "rows": 300, "seed": 2,
             "model": {"kind": "logistic"}}
        ],
        "benchmarks_dir": benchmarks_dir(),
    }))
    .unwrap()
}

fn benchmarks_dir() -> &'static std::path::Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("small");
        std::fs::create_dir_all(&run).unwrap();
        std::fs::write(run.join("summary.json"), r#"{"rows":1,"cells":[]}"#).unwrap();
        std::fs::write(
            run.join("results.csv"),
            "dataset,model,method,m,seed,gain,plausibility,robustness,diversity\ncredit,logistic,sgen,1,0,0.5,0.1,1.0,0.0\n",
        )
        .unwrap();
        dir
    })
    .path()
}

fn app() -> Router {
    router(AppState::load(&config()).unwrap())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn raw_explain(app: &Router, body: Value) -> (StatusCode, Vec<u8>) {
    let req = Request::post("/v1/explain")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn first(app: &Router, dataset: &str, label: &str) -> Value {
    let (status, list) = call(app, "GET", &format!("/v1/datasets/{dataset}/individuals?label={label}&limit=5"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!list.as_array().unwrap().is_empty());
    list[0].clone()
}

#[tokio::test]
async fn lists_datasets_and_schemas() {
    let app = app();
    let (status, list) = call(&app, "GET", "/v1/datasets", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["adult", "credit"]);
    assert_eq!(list[0]["causal"], true);

    let (status, schema) = call(&app, "GET", "/v1/datasets/credit/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(schema["schema"]["features"].as_array().unwrap().len(), 20);
    assert!(schema["ranges"]["amount"][1].as_f64().unwrap() > schema["ranges"]["amount"][0].as_f64().unwrap());

    let (status, err) = call(&app, "GET", "/v1/datasets/nope/schema", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["field"], "dataset");
}

#[tokio::test]
async fn individuals_filter_by_predicted_label() {
    let app = app();
    let (_, pos) = call(&app, "GET", "/v1/datasets/credit/individuals?label=positive", None).await;
    let (_, neg) = call(&app, "GET", "/v1/datasets/credit/individuals?label=negative&limit=3", None).await;
    assert!(pos.as_array().unwrap().iter().all(|i| i["label"] == 1));
    assert!(neg.as_array().unwrap().len() <= 3);
    assert!(neg.as_array().unwrap().iter().all(|i| i["label"] == 0));
    let (status, err) = call(&app, "GET", "/v1/datasets/credit/individuals?label=maybe", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["field"], "label");
}

#[tokio::test]
async fn single_explanation_round_trips_through_probe() {
    let app = app();
    let ind = first(&app, "credit", "positive").await;
    let (status, set) = call(
        &app,
        "POST",
        "/v1/explain",
        Some(json!({"dataset": "credit", "individual": {"id": ind["id"]}, "method": "sgen", "m": 1, "seed": 3})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{set}");
    assert_eq!(set["items"].as_array().unwrap().len(), 1);
    let item = &set["items"][0];
    assert!(item["robustness_mc"].is_number());
    assert!(set["sentences"][0].as_str().unwrap().starts_with("Even if"));

    let (status, probe) =
        call(&app, "POST", "/v1/probe", Some(json!({"dataset": "credit", "record": item["semifactual"]}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(probe["label"], 1);
    assert_eq!(probe["score"].as_f64().unwrap().to_bits(), item["score"].as_f64().unwrap().to_bits());
}

#[tokio::test]
async fn inline_records_and_causal_methods_are_explained() {
    let app = app();
    let ind = first(&app, "adult", "positive").await;
    for method in ["sgen_causal", "karimi_star", "dominguez_star"] {
        let (status, set) = call(
            &app,
            "POST",
            "/v1/explain",
            Some(json!({"dataset": "adult", "individual": {"record": ind["record"]}, "method": method, "m": 2})),
        )
        .await;
        assert!(status == StatusCode::OK || status == StatusCode::UNPROCESSABLE_ENTITY, "{method}: {set}");
        if status == StatusCode::OK {
            assert_eq!(set["method"], method);
        }
    }
}

#[tokio::test]
async fn probe_agrees_with_predict_bit_for_bit() {
    let app = app();
    let (_, list) = call(&app, "GET", "/v1/datasets/credit/individuals?limit=20", None).await;
    for ind in list.as_array().unwrap() {
        let body = json!({"dataset": "credit", "record": ind["record"]});
        let (_, p) = call(&app, "POST", "/v1/predict", Some(body.clone())).await;
        let (_, q) = call(&app, "POST", "/v1/probe", Some(body)).await;
        assert_eq!(p["score"].as_f64().unwrap().to_bits(), q["score"].as_f64().unwrap().to_bits());
        assert_eq!(p["score"].as_f64().unwrap().to_bits(), ind["score"].as_f64().unwrap().to_bits());
        assert_eq!(p["label"], ind["label"]);
    }
}

#[tokio::test]
async fn negative_individual_is_refused() {
    let app = app();
    let ind = first(&app, "credit", "negative").await;
    let (status, err) =
        call(&app, "POST", "/v1/explain", Some(json!({"dataset": "credit", "individual": {"id": ind["id"]}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(err["error"].as_str().unwrap().contains("not a positive outcome"));
    assert_eq!(err["field"], "individual");
}

#[tokio::test]
async fn invalid_override_names_the_feature() {
    let app = app();
    let ind = first(&app, "credit", "positive").await;
    let body = json!({
        "dataset": "credit",
        "individual": {"id": ind["id"]},
        "overrides": {"duration": {"actionable": false, "bounds": [0.0, 1000.0]}},
    });
    let (status, err) = call(&app, "POST", "/v1/explain", Some(body)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["field"], "duration");
    assert!(err["error"].as_str().unwrap().contains("duration"));
}

#[tokio::test]
async fn overrides_apply_to_one_request_only() {
    let app = app();
    let ind = first(&app, "credit", "positive").await;
    let base = json!({"dataset": "credit", "individual": {"id": ind["id"]}, "m": 2, "seed": 1});
    let mut frozen = base.clone();
    frozen["overrides"] = json!({"duration": {"actionable": false}});
    let (status, set) = call(&app, "POST", "/v1/explain", Some(frozen)).await;
    if status == StatusCode::OK {
        for item in set["items"].as_array().unwrap() {
            assert!(item["action"].get("duration").is_none());
        }
    }
    let (a, b) = (raw_explain(&app, base.clone()).await, raw_explain(&app, base).await);
    assert_eq!(a, b);
}

#[tokio::test]
async fn identical_requests_give_identical_bodies() {
    let app = app();
    let ind = first(&app, "credit", "positive").await;
    let body = json!({"dataset": "credit", "individual": {"id": ind["id"]}, "m": 3, "seed": 11,
                      "config": {"genetic": {"generations": 5}}});
    let a = raw_explain(&app, body.clone()).await;
    assert_eq!(a.0, StatusCode::OK);
    assert_eq!(a, raw_explain(&app, body).await);
}

#[tokio::test]
async fn malformed_requests_are_bad_requests() {
    let app = app();
    let (status, err) = call(&app, "POST", "/v1/explain", Some(json!({"dataset": "credit"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["field"], "body");
    let (status, err) = call(
        &app,
        "POST",
        "/v1/explain",
        Some(json!({"dataset": "credit", "individual": {"id": "0"}, "config": {"genetic": {"nope": 1}}})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["field"], "config");
    let (status, err) =
        call(&app, "POST", "/v1/explain", Some(json!({"dataset": "nope", "individual": {"id": "0"}}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["field"], "dataset");
    let (status, err) =
        call(&app, "POST", "/v1/explain", Some(json!({"dataset": "credit", "individual": {"id": "99999"}}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["field"], "individual");
    let (status, err) = call(
        &app,
        "POST",
        "/v1/predict",
        Some(json!({"dataset": "credit", "record": {"duration": 3.0}})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(err["field"].is_string());
}

#[tokio::test]
async fn slow_explanations_time_out() {
    let mut cfg = config();
    cfg.timeout_secs = 0;
    let app = router(AppState::load(&cfg).unwrap());
    let ind = first(&app, "credit", "positive").await;
    let (status, err) = call(
        &app,
        "POST",
        "/v1/explain",
        Some(json!({"dataset": "credit", "individual": {"id": ind["id"]}, "m": 10})),
    )
    .await;
    assert_eq!(status, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(err["kind"], "timeout");
}

#[tokio::test]
async fn benchmark_runs_are_served() {
    let app = app();
    let (status, run) = call(&app, "GET", "/v1/benchmarks/small", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(run["summary"]["rows"], 1);
    assert_eq!(run["rows"][0]["method"], "sgen");
    assert_eq!(run["rows"][0]["gain"], 0.5);
    let (status, _) = call(&app, "GET", "/v1/benchmarks/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/v1/benchmarks/..", None).await;
    assert_ne!(status, StatusCode::OK);
}
