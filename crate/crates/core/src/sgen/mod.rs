//! The two semifactual engines and the explanation-set contract they share.

mod causal;
mod genetic;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

pub use causal::{explain_causal, CausalConfig};
pub use genetic::{explain_noncausal, GaConfig};
pub use render::{describe_changes, even_if_sentence};

use crate::data::{Action, ActionSpace, BlockKind, CoordKind, Encoder, Record};
use crate::error::SearchDiagnostics;
use crate::linalg::{linf_distance, Norm};
use crate::objective::{self, ObjectiveConfig, Payoff, QueryIndex};
use crate::predictors::Predictor;
use crate::{Error, Result, Rng};

/// Two semifactuals closer than this (scaled L-infinity) count as the same.
pub const UNIQUE_TOL: f64 = 1e-6;

/// Engine settings carried by explanation requests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub objective: ObjectiveConfig,
    pub genetic: GaConfig,
    pub causal: CausalConfig,
    pub baselines: crate::baselines::BaselineConfig,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        self.genetic.validate()?;
        self.causal.validate()?;
        self.baselines.validate()
    }
}

/// One semifactual with its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    /// Per actionable feature: raw-unit delta (continuous) or target level.
    pub action: BTreeMap<String, Json>,
    /// Decoded end state after the action (and its causal effects).
    pub semifactual: Record,
    pub gain: f64,
    pub plausibility: f64,
    pub robustness_mc: f64,
    pub robustness_abs: f64,
    pub score: f64,
    /// Gain of the action alone, without downstream effects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_gain: Option<f64>,
    /// Set on items copied to fill the set up to `m`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub duplicate: bool,
    /// Encoded end state.
    #[serde(skip)]
    pub encoded: Vec<f64>,
    /// The action in action-space coordinates.
    #[serde(skip)]
    pub raw_action: Action,
}

/// Per-run search traces, kept for inspection and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    /// Best fitness after each generation (genetic engine).
    pub generation_best: Vec<f64>,
    /// Lagrange multiplier at every iteration, per action subset (causal engine).
    pub lambdas: Vec<Vec<f64>>,
    /// Iterations run per action subset (causal engine).
    pub iterations: Vec<usize>,
    /// Subsets skipped because their first step already failed.
    pub skipped_subsets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSet {
    pub method: String,
    pub seed: u64,
    pub m: usize,
    pub diversity: f64,
    pub items: Vec<Item>,
    /// Set when no item has positive gain (baselines report this instead of failing).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_effective_semifactual: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Json::is_null")]
    pub config: Json,
    #[serde(skip)]
    pub trace: SearchTrace,
}

impl ExplanationSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn gains(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.gain).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.items.iter().map(|i| i.encoded.clone()).collect()
    }
}

/// `project_action`: clamp every coordinate into its feasible interval.
pub fn project_action(action: &Action, space: &ActionSpace) -> Action {
    space.clip(action)
}

/// Refuses individuals the model does not already score positively.
pub fn ensure_positive(model: &Predictor, x: &[f64]) -> Result<()> {
    let score = model.predict_score(x)?;
    if score > model.psi {
        Ok(())
    } else {
        Err(Error::NotPositive { score, psi: model.psi })
    }
}

/// Everything an engine needs about one request.
pub struct Problem<'a> {
    pub x: Vec<f64>,
    pub model: &'a Predictor,
    pub encoder: &'a Encoder,
    pub space: ActionSpace,
    pub payoff: Payoff,
    pub cfg: &'a ObjectiveConfig,
    /// Nearest-neighbour search for plausibility, when training data is given.
    pub neighbors: Option<QueryIndex>,
    /// Columns and domains perturbed by the robustness neighbourhood.
    pub ball_columns: Vec<usize>,
    pub ball_bounds: Vec<(f64, f64)>,
}

impl<'a> Problem<'a> {
    pub fn new(
        x: &[f64],
        model: &'a Predictor,
        encoder: &'a Encoder,
        cfg: &'a ObjectiveConfig,
        training: Option<&objective::NeighborIndex>,
        causal: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        if x.len() != encoder.width() || model.width != encoder.width() {
            return Err(Error::WidthMismatch {
                expected: encoder.width(),
                got: if x.len() != encoder.width() { x.len() } else { model.width },
            });
        }
        ensure_positive(model, x)?;
        let space = ActionSpace::new(x, encoder)?;
        let (ball_columns, ball_bounds) = space.real_columns();
        let neighbors = training.map(|t| {
            // Causal end states can move any column; substitutions only the actionable ones.
            let cols: Vec<usize> = if causal {
                (0..encoder.width()).collect()
            } else {
                space.coords().iter().flat_map(|c| c.block.columns()).collect()
            };
            t.for_query(x, &cols)
        });
        let default_norm = if causal { Norm::L1 } else { Norm::L2 };
        Ok(Problem {
            x: x.to_vec(),
            model,
            encoder,
            payoff: Payoff::new(encoder, cfg.gain_norm.unwrap_or(default_norm)),
            space,
            cfg,
            neighbors,
            ball_columns,
            ball_bounds,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.model.psi + self.cfg.psi_margin
    }

    pub fn plausibility(&self, theta: &[f64]) -> f64 {
        match &self.neighbors {
            Some(n) => objective::plausibility(n.nearest_sq(theta), self.cfg.gamma_p),
            None => 1.0,
        }
    }

    /// Share of `n_mc` fresh neighbourhood samples around `theta` that keep
    /// the positive label.
    pub fn robustness_sampled(&self, theta: &[f64], rng: &mut Rng) -> f64 {
        if self.ball_columns.is_empty() {
            return f64::from(self.model.label(theta));
        }
        let offsets = objective::ball_offsets(
            self.ball_columns.len(),
            self.cfg.epsilon,
            self.cfg.n_mc,
            self.cfg.neighborhood_norm,
            rng,
        );
        let samples = objective::place_offsets(theta, &self.ball_columns, &self.ball_bounds, &offsets);
        objective::robustness_probabilistic(self.model, 1, &samples)
    }

    /// Action as `{feature: raw delta or target level}`.
    pub fn action_json(&self, action: &Action) -> BTreeMap<String, Json> {
        let schema = self.encoder.schema();
        self.space
            .coords()
            .iter()
            .zip(&action.values)
            .map(|(c, &v)| {
                let spec = &schema.features[c.feature];
                let value = match (c.kind, c.block.kind) {
                    (CoordKind::Level, _) => Json::from(spec.levels[v as usize].clone()),
                    (CoordKind::Real, BlockKind::Ordinal { levels }) => {
                        let idx = (v * (levels - 1) as f64).round().clamp(0.0, (levels - 1) as f64);
                        Json::from(spec.levels[idx as usize].clone())
                    }
                    (CoordKind::Real, _) => Json::from((v - c.current) * c.block.range()),
                };
                (spec.name.clone(), value)
            })
            .collect()
    }

    /// Builds an item for `action` with end state `theta`.
    pub fn item(&self, action: Action, theta: Vec<f64>, robustness_mc: f64, action_gain: Option<f64>) -> Result<Item> {
        let score = self.model.score(&theta);
        Ok(Item {
            action: self.action_json(&action),
            semifactual: self.encoder.decode_record(&theta)?,
            gain: self.payoff.gain(&self.x, &theta),
            plausibility: self.plausibility(&theta),
            robustness_mc,
            robustness_abs: objective::robustness_absolute(self.model, &theta, self.threshold()),
            score,
            action_gain,
            duplicate: false,
            encoded: theta,
            raw_action: action,
        })
    }

    pub fn set(&self, method: &str, seed: u64, m: usize, items: Vec<Item>, config: Json) -> ExplanationSet {
        let points: Vec<Vec<f64>> = items.iter().map(|i| i.encoded.clone()).collect();
        ExplanationSet {
            method: method.to_string(),
            seed,
            m,
            diversity: objective::diversity(&points),
            no_effective_semifactual: items.iter().all(|i| i.gain <= 0.0),
            items,
            warnings: Vec::new(),
            config,
            trace: SearchTrace::default(),
        }
    }
}

/// Keeps candidates in order, dropping near-duplicates (scaled L-infinity).
pub(crate) fn push_unique(chosen: &mut Vec<Item>, item: Item) -> bool {
    if chosen.iter().all(|c| linf_distance(&c.encoded, &item.encoded) > UNIQUE_TOL) {
        chosen.push(item);
        true
    } else {
        false
    }
}

/// Fills `items` up to `m` with random copies of its members.
pub(crate) fn complement(items: &mut Vec<Item>, m: usize, rng: &mut Rng) {
    use rand::Rng as _;
    let found = items.len();
    while items.len() < m && found > 0 {
        let mut copy = items[rng.random_range(0..found)].clone();
        copy.duplicate = true;
        items.push(copy);
    }
}

pub(crate) fn empty_result(evaluated: usize, positive: usize, positive_gain: usize, note: &str) -> Error {
    Error::EmptyResult(SearchDiagnostics {
        evaluated,
        positive,
        positive_gain,
        note: note.to_string(),
    })
}
