//! The `/v1` HTTP service.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use semifactual::data::{BlockKind, Record};
use semifactual::evaluation::{DataSource, DatasetSpec, Row};
use semifactual::sgen::EngineConfig;

use crate::error::{AppError, ErrorKind};
use crate::session::{ExplainRequest, Explained, Prediction, ServedDataset, Session};

fn default_timeout() -> u64 {
    30
}

fn default_benchmarks() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    pub datasets: Vec<ServedDataset>,
    #[serde(default)]
    pub engine: EngineConfig,
    /// Directory holding one sub-directory per benchmark run.
    #[serde(default = "default_benchmarks")]
    pub benchmarks_dir: PathBuf,
    /// Limit on a single explanation request.
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub train_seed: u64,
}

impl Default for ServerConfig {
    /// Synthetic credit and adult datasets with logistic models.
    fn default() -> Self {
        let synthetic = |name: &str, rows| ServedDataset {
            spec: DatasetSpec {
                name: name.into(),
                source: DataSource::Synthetic {
                    generator: name.into(),
                    rows,
                    seed: 0,
                },
            },
            model: None,
            model_path: None,
        };
        ServerConfig {
            datasets: vec![synthetic("credit", 1000), synthetic("adult", 1000)],
            engine: EngineConfig::default(),
            benchmarks_dir: default_benchmarks(),
            timeout_secs: default_timeout(),
            train_seed: 0,
        }
    }
}

pub struct AppState {
    pub sessions: BTreeMap<String, Arc<Session>>,
    pub engine: EngineConfig,
    pub benchmarks_dir: PathBuf,
    pub timeout: Duration,
}

impl AppState {
    pub fn load(cfg: &ServerConfig) -> Result<AppState, AppError> {
        cfg.engine.validate()?;
        let mut sessions = BTreeMap::new();
        for entry in &cfg.datasets {
            let session = Session::load(entry, cfg.train_seed, cfg.engine.objective.plausibility_positive_only)?;
            if sessions.insert(session.id.clone(), Arc::new(session)).is_some() {
                return Err(AppError::bad_request("datasets", format!("duplicate dataset `{}`", entry.spec.name)));
            }
        }
        Ok(AppState {
            sessions,
            engine: cfg.engine.clone(),
            benchmarks_dir: cfg.benchmarks_dir.clone(),
            timeout: Duration::from_secs(cfg.timeout_secs),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, AppError> {
        self.sessions
            .get(id)
            .cloned()
            .ok_or_else(|| AppError::not_found("dataset", format!("unknown dataset `{id}`")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/datasets", get(datasets))
        .route("/v1/datasets/{id}/schema", get(schema))
        .route("/v1/datasets/{id}/individuals", get(individuals))
        .route("/v1/predict", post(predict))
        .route("/v1/probe", post(predict))
        .route("/v1/explain", post(explain))
        .route("/v1/benchmarks/{run}", get(benchmark))
        .with_state(Arc::new(state))
}

type Shared = State<Arc<AppState>>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, AppError> {
    payload.map(|Json(v)| v).map_err(|e| AppError::bad_request("body", e.body_text()))
}

async fn datasets(State(state): Shared) -> Json<Value> {
    let list: Vec<Value> = state
        .sessions
        .values()
        .map(|s| {
            json!({
                "id": s.id,
                "rows": s.data.len(),
                "features": s.data.schema().features.len(),
                "model": s.model.kind(),
                "train_accuracy": s.train_accuracy,
                "causal": s.scm.is_some(),
                "encoding": s.data.encoder.encoding(),
            })
        })
        .collect();
    Json(Value::Array(list))
}

async fn schema(State(state): Shared, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, AppError> {
    let s = state.session(&id)?;
    let ranges: BTreeMap<&str, [f64; 2]> = s
        .data
        .schema()
        .features
        .iter()
        .zip(s.data.encoder.blocks())
        .filter_map(|(f, b)| match b.kind {
            BlockKind::Continuous { min, max } => Some((f.name.as_str(), [min, max])),
            _ => None,
        })
        .collect();
    Ok(Json(json!({ "schema": s.data.schema(), "ranges": ranges })))
}

#[derive(Debug, Deserialize)]
struct IndividualsQuery {
    label: Option<String>,
    limit: Option<usize>,
}

async fn individuals(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<IndividualsQuery>,
) -> Result<Json<Value>, AppError> {
    let s = state.session(&id)?;
    let wanted = match q.label.as_deref() {
        None => None,
        Some("positive") => Some(1),
        Some("negative") => Some(0),
        Some(other) => {
            return Err(AppError::bad_request(
                "label",
                format!("label must be `positive` or `negative`, got `{other}`"),
            ))
        }
    };
    let list: Vec<Value> = s
        .data
        .individuals
        .iter()
        .filter_map(|ind| {
            let label = s.model.label(&ind.x);
            (wanted.is_none() || wanted == Some(label)).then(|| {
                json!({
                    "id": ind.id,
                    "record": s.data.encoder.record_from_values(&ind.raw),
                    "score": s.model.score(&ind.x),
                    "label": label,
                })
            })
        })
        .take(q.limit.unwrap_or(100))
        .collect();
    Ok(Json(Value::Array(list)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRequest {
    dataset: String,
    record: Record,
}

async fn predict(
    State(state): Shared,
    payload: Result<Json<ScoreRequest>, JsonRejection>,
) -> Result<Json<Prediction>, AppError> {
    let req = body(payload)?;
    Ok(Json(state.session(&req.dataset)?.score(&req.record)?))
}

async fn explain(
    State(state): Shared,
    payload: Result<Json<ExplainRequest>, JsonRejection>,
) -> Result<Json<Explained>, AppError> {
    let req = body(payload)?;
    let session = state.session(&req.dataset)?;
    let engine = state.engine.clone();
    let task = tokio::task::spawn_blocking(move || session.explain(&req, &engine));
    match tokio::time::timeout(state.timeout, task).await {
        Ok(Ok(result)) => result.map(Json),
        Ok(Err(e)) => Err(AppError::internal(format!("explanation task failed: {e}"))),
        Err(_) => Err(AppError::new(
            ErrorKind::Timeout,
            None,
            format!("explanation exceeded {} s", state.timeout.as_secs_f64()),
        )),
    }
}

/// A summary of a benchmark run written by `sgen benchmark`.
pub fn read_run(dir: &Path) -> Result<Value, AppError> {
    let summary = std::fs::read_to_string(dir.join("summary.json"))
        .map_err(|_| AppError::not_found("run", format!("no benchmark run at `{}`", dir.display())))?;
    let summary: Value = serde_json::from_str(&summary).map_err(|e| AppError::internal(e.to_string()))?;
    let rows: Vec<Row> = csv::Reader::from_path(dir.join("results.csv"))
        .and_then(|mut r| r.deserialize().collect::<Result<_, _>>())
        .map_err(|e| AppError::internal(format!("results.csv: {e}")))?;
    Ok(json!({ "summary": summary, "rows": rows }))
}

async fn benchmark(State(state): Shared, UrlPath(run): UrlPath<String>) -> Result<Json<Value>, AppError> {
    let valid = !run.is_empty()
        && run != "."
        && run != ".."
        && run.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if !valid {
        return Err(AppError::bad_request("run", format!("invalid run name `{run}`")));
    }
    read_run(&state.benchmarks_dir.join(&run)).map(Json)
}
