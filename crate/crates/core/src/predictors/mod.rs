//! Binary classifiers scored in `[0, 1]`, with gradients for the causal engine.

mod bayes;
mod logistic;
mod mlp;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bayes::{BayesConfig, Likelihood, NaiveBayes};
pub use logistic::{Logistic, LogisticConfig};
pub use mlp::{Mlp, MlpConfig};
pub use tree::{Node, Tree, TreeConfig};

use crate::data::Dataset;
use crate::{rng_for, Error, Result};

/// Finite-difference step (scaled units) for models without analytic gradients.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Model {
    Logistic(Logistic),
    Tree(Tree),
    NaiveBayes(NaiveBayes),
    Mlp(Mlp),
    /// Scores every input the same; useful as a degenerate reference.
    Constant(f64),
}

/// A trained scorer with its decision threshold. Serialises as
/// `{"kind", "schema_hash", "psi", "params"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    #[serde(flatten)]
    pub model: Model,
    pub schema_hash: String,
    pub psi: f64,
    pub width: usize,
}

impl Predictor {
    pub fn new(model: Model, psi: f64, width: usize) -> Self {
        Predictor {
            model,
            schema_hash: String::new(),
            psi,
            width,
        }
    }

    pub fn logistic(weights: Vec<f64>, bias: f64, psi: f64) -> Self {
        let width = weights.len();
        Predictor::new(Model::Logistic(Logistic::new(weights, bias)), psi, width)
    }

    pub fn kind(&self) -> &'static str {
        match self.model {
            Model::Logistic(_) => "logistic",
            Model::Tree(_) => "tree",
            Model::NaiveBayes(_) => "naive_bayes",
            Model::Mlp(_) => "mlp",
            Model::Constant(_) => "constant",
        }
    }

    /// Score without a width check; engines call this in hot loops.
    pub fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.width);
        match &self.model {
            Model::Logistic(m) => m.score(x),
            Model::Tree(m) => m.score(x),
            Model::NaiveBayes(m) => m.score(x),
            Model::Mlp(m) => m.score(x),
            Model::Constant(s) => *s,
        }
    }

    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.score(x))
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        self.check(x)?;
        Ok(self.label(x))
    }

    pub fn label(&self, x: &[f64]) -> u8 {
        u8::from(self.score(x) > self.psi)
    }

    pub fn is_positive(&self, x: &[f64]) -> bool {
        self.score(x) > self.psi
    }

    pub fn has_analytic_gradient(&self) -> bool {
        matches!(self.model, Model::Logistic(_) | Model::Mlp(_) | Model::Constant(_))
    }

    /// d score / d x; central differences for trees and naive Bayes.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.model {
            Model::Logistic(m) => m.gradient(x),
            Model::Mlp(m) => m.gradient(x),
            Model::Constant(_) => vec![0.0; x.len()],
            _ => finite_difference(|v| self.score(v), x, FD_STEP),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Predictor::from_json(&std::fs::read_to_string(path)?)
    }

    /// Loads a model and checks it was trained against `schema_hash`.
    pub fn load_for(path: impl AsRef<Path>, schema_hash: &str) -> Result<Self> {
        let p = Predictor::load(path)?;
        if !p.schema_hash.is_empty() && p.schema_hash != schema_hash {
            return Err(Error::Config(format!(
                "model was trained for schema {} but the dataset schema is {schema_hash}",
                p.schema_hash
            )));
        }
        Ok(p)
    }
}

/// Central differences of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            v[i] = x[i] + step;
            let up = f(&v);
            v[i] = x[i] - step;
            let down = f(&v);
            v[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Which model to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Logistic(#[serde(default)] LogisticConfig),
    Tree(#[serde(default)] TreeConfig),
    NaiveBayes(#[serde(default)] BayesConfig),
    Mlp(#[serde(default)] MlpConfig),
}

impl ModelSpec {
    pub fn parse_kind(kind: &str) -> Result<Self> {
        Ok(match kind {
            "logistic" | "lr" => ModelSpec::Logistic(Default::default()),
            "tree" | "dt" => ModelSpec::Tree(Default::default()),
            "naive_bayes" | "naive-bayes" | "nb" => ModelSpec::NaiveBayes(Default::default()),
            "mlp" => ModelSpec::Mlp(Default::default()),
            other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Logistic(_) => "logistic",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::NaiveBayes(_) => "naive_bayes",
            ModelSpec::Mlp(_) => "mlp",
        }
    }
}

/// Trains a model on every row of `data`. Deterministic given `seed`.
pub fn train(data: &Dataset, spec: &ModelSpec, seed: u64) -> Result<Predictor> {
    if data.is_empty() {
        return Err(Error::NoData);
    }
    let pos = data.labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::SingleClass);
    }
    let xs: Vec<&[f64]> = data.rows().collect();
    let ys = &data.labels;
    let model = match spec {
        ModelSpec::Logistic(cfg) => Model::Logistic(Logistic::fit(&xs, ys, cfg)),
        ModelSpec::Tree(cfg) => Model::Tree(Tree::fit(&xs, ys, cfg)),
        ModelSpec::NaiveBayes(cfg) => Model::NaiveBayes(NaiveBayes::fit(&xs, ys, data.encoder.blocks(), cfg)),
        ModelSpec::Mlp(cfg) => Model::Mlp(Mlp::fit(&xs, ys, cfg, &mut rng_for(seed, 0x3170))),
    };
    let mut p = Predictor::new(model, data.schema().psi, data.width());
    p.schema_hash = data.schema().hash();
    Ok(p)
}

/// A model together with its accuracy on a held-out split.
#[derive(Debug, Clone)]
pub struct Trained {
    pub predictor: Predictor,
    pub train_accuracy: f64,
    pub holdout_accuracy: f64,
}

/// Splits off `holdout` of the rows, trains on the rest and reports accuracy.
pub fn train_with_holdout(data: &Dataset, spec: &ModelSpec, holdout: f64, seed: u64) -> Result<Trained> {
    let (train_set, test_set) = data.split(holdout, seed);
    let predictor = train(&train_set, spec, seed)?;
    Ok(Trained {
        train_accuracy: accuracy(&predictor, &train_set),
        holdout_accuracy: if test_set.is_empty() {
            f64::NAN
        } else {
            accuracy(&predictor, &test_set)
        },
        predictor,
    })
}

pub fn accuracy(p: &Predictor, data: &Dataset) -> f64 {
    let hits = data.rows().zip(&data.labels).filter(|(x, &y)| p.label(x) == y).count();
    hits as f64 / data.len() as f64
}
