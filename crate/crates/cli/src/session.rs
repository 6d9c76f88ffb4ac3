//! A loaded dataset with its model, and the request types shared by the
//! command line and the HTTP service.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use semifactual::data::{Dataset, Overrides, Record};
use semifactual::evaluation::DatasetSpec;
use semifactual::method::{explain, Context, Method};
use semifactual::objective::NeighborIndex;
use semifactual::predictors::{accuracy, train, ModelSpec, Predictor};
use semifactual::scm::Scm;
use semifactual::sgen::{even_if_sentence, EngineConfig, ExplanationSet};

use crate::error::AppError;

/// A dataset as served: its rows, causal model, trained model and the
/// training index used for plausibility.
pub struct Session {
    pub id: String,
    pub data: Dataset,
    pub scm: Option<Scm>,
    pub model: Predictor,
    pub neighbors: NeighborIndex,
    pub train_accuracy: f64,
}

/// A dataset entry of the server configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServedDataset {
    #[serde(flatten)]
    pub spec: DatasetSpec,
    /// Model trained at start-up when no `model_path` is given.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub model_path: Option<PathBuf>,
}

impl Session {
    pub fn load(entry: &ServedDataset, train_seed: u64, positive_only: bool) -> Result<Session, AppError> {
        let (data, scm) = entry.spec.load()?;
        let model = match (&entry.model_path, &entry.model) {
            (Some(path), _) => Predictor::load_for(path, &data.schema().hash())?,
            (None, Some(spec)) => train(&data, spec, train_seed)?,
            (None, None) => train(&data, &ModelSpec::parse_kind("logistic")?, train_seed)?,
        };
        Session::new(entry.spec.name.clone(), data, scm, model, positive_only)
    }

    pub fn new(
        id: String,
        data: Dataset,
        scm: Option<Scm>,
        model: Predictor,
        positive_only: bool,
    ) -> Result<Session, AppError> {
        if model.width != data.width() {
            return Err(semifactual::Error::WidthMismatch {
                expected: data.width(),
                got: model.width,
            }
            .into());
        }
        let neighbors = NeighborIndex::from_dataset(&data, positive_only)?;
        Ok(Session {
            train_accuracy: accuracy(&model, &data),
            id,
            data,
            scm,
            model,
            neighbors,
        })
    }

    /// Encodes an individual given by row id or inline record.
    pub fn resolve(&self, individual: &IndividualRef) -> Result<(Vec<f64>, Record), AppError> {
        match individual {
            IndividualRef::Id { id } => {
                let ind = self
                    .data
                    .find(id)
                    .ok_or_else(|| AppError::not_found("individual", format!("no individual with id `{id}`")))?;
                Ok((ind.x.clone(), self.data.encoder.record_from_values(&ind.raw)))
            }
            IndividualRef::Record { record } => Ok((self.data.encoder.encode_record(record)?, record.clone())),
        }
    }

    pub fn score(&self, record: &Record) -> Result<Prediction, AppError> {
        let x = self.data.encoder.encode_record(record)?;
        Ok(Prediction {
            score: self.model.predict_score(&x)?,
            label: self.model.predict_label(&x)?,
        })
    }

    /// Runs one explanation request against `base` engine settings.
    pub fn explain(&self, req: &ExplainRequest, base: &EngineConfig) -> Result<Explained, AppError> {
        let cfg = merged_config(base, req.config.as_ref())?;
        if req.m == 0 {
            return Err(AppError::bad_request("m", "m must be at least 1"));
        }
        let schema = self.data.schema().with_overrides(&req.overrides)?;
        let encoder = self.data.encoder.with_schema(schema)?;
        let (x, original) = self.resolve(&req.individual)?;
        let ctx = Context {
            model: &self.model,
            encoder: &encoder,
            data: Some(&self.data),
            neighbors: Some(&self.neighbors),
            scm: self.scm.as_ref(),
        };
        let set = explain(req.method, &x, ctx, req.m, &cfg, req.seed)?;
        let sentences = set
            .items
            .iter()
            .map(|item| even_if_sentence(encoder.schema(), &original, item))
            .collect();
        Ok(Explained { set, sentences })
    }
}

/// Applies a partial JSON object on top of `base`.
pub fn merged_config(base: &EngineConfig, overrides: Option<&Json>) -> Result<EngineConfig, AppError> {
    let Some(overrides) = overrides else {
        return Ok(base.clone());
    };
    let mut value = serde_json::to_value(base).map_err(semifactual::Error::from)?;
    merge(&mut value, overrides);
    let cfg: EngineConfig =
        serde_json::from_value(value).map_err(|e| AppError::bad_request("config", e.to_string()))?;
    cfg.validate().map_err(|e| AppError::bad_request("config", e.to_string()))?;
    Ok(cfg)
}

fn merge(base: &mut Json, patch: &Json) {
    match (base, patch) {
        (Json::Object(b), Json::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Json::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndividualRef {
    Id { id: String },
    Record { record: Record },
}

fn default_m() -> usize {
    1
}

fn default_method() -> Method {
    Method::Sgen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    #[serde(default)]
    pub dataset: String,
    pub individual: IndividualRef,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_m")]
    pub m: usize,
    /// Per-feature constraint changes for this request only.
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub seed: u64,
    /// Partial engine settings merged over the defaults.
    #[serde(default)]
    pub config: Option<Json>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Explained {
    #[serde(flatten)]
    pub set: ExplanationSet,
    /// One "Even if ..." sentence per item.
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub label: u8,
}
