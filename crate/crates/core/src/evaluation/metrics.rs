use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{BlockKind, Encoder};
use crate::linalg::Norm;
use crate::method::Method;
use crate::objective::{self, NeighborIndex, Payoff};
use crate::predictors::Predictor;
use crate::sgen::ExplanationSet;
use crate::{rng_for, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Half-width of the single-feature perturbations (scaled units).
    pub epsilon: f64,
    /// Perturbations per semifactual.
    pub n: usize,
    /// Norm of the reported gain. By default, the norm the method optimises:
    /// L1 for causal methods, L2 otherwise.
    pub gain_norm: Option<Norm>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            epsilon: 0.1,
            n: 100,
            gain_norm: None,
        }
    }
}

/// The four comparison metrics of one explanation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean gain of the items.
    pub gain: f64,
    /// Mean distance from each item to its nearest training row (lower is better).
    pub plausibility: f64,
    /// Share of single-feature perturbations that keep the positive label.
    pub robustness: f64,
    /// Mean pairwise distance between items.
    pub diversity: f64,
}

pub(crate) fn gain_norm_for(set: &ExplanationSet, cfg: &EvalConfig) -> Norm {
    cfg.gain_norm.unwrap_or_else(|| match set.method.parse::<Method>() {
        Ok(m) if m.is_causal() => Norm::L1,
        _ => Norm::L2,
    })
}

/// Fraction of `n` perturbations of `theta` that keep the positive label, each
/// changing one feature: real columns move uniformly within `±epsilon`,
/// categorical features switch to a random other level. Only actionable
/// features are perturbed, unless there are none.
pub fn single_feature_robustness(
    model: &Predictor,
    encoder: &Encoder,
    theta: &[f64],
    epsilon: f64,
    n: usize,
    rng: &mut crate::Rng,
) -> f64 {
    if n == 0 {
        return f64::from(model.label(theta));
    }
    let schema = encoder.schema();
    let mut features: Vec<usize> = (0..schema.features.len()).filter(|&f| schema.features[f].actionable).collect();
    if features.is_empty() {
        features = (0..schema.features.len()).collect();
    }
    let mut hits = 0;
    for _ in 0..n {
        let block = encoder.block(features[rng.random_range(0..features.len())]);
        let mut p = theta.to_vec();
        match block.kind {
            BlockKind::Continuous { .. } => {
                let v = theta[block.offset] + rng.random_range(-epsilon..=epsilon);
                p[block.offset] = v.clamp(0.0, 1.0);
            }
            BlockKind::Ordinal { levels } | BlockKind::OneHot { levels } => {
                let current = (block.read(theta).round().max(0.0) as usize).min(levels - 1);
                let level = if levels > 1 {
                    let other = rng.random_range(0..levels - 1);
                    if other >= current {
                        other + 1
                    } else {
                        other
                    }
                } else {
                    current
                };
                match block.kind {
                    BlockKind::Ordinal { .. } => p[block.offset] = level as f64 / (levels.max(2) - 1) as f64,
                    _ => {
                        for c in block.columns() {
                            p[c] = 0.0;
                        }
                        p[block.offset + level] = 1.0;
                    }
                }
            }
        }
        if model.label(&p) == 1 {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}

/// Recomputes the comparison metrics of `set` for the individual `x`.
pub fn evaluate_explanations(
    set: &ExplanationSet,
    x: &[f64],
    model: &Predictor,
    encoder: &Encoder,
    training: &NeighborIndex,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<Metrics> {
    if set.items.is_empty() {
        return Err(Error::Config("cannot evaluate an empty explanation set".into()));
    }
    let payoff = Payoff::new(encoder, gain_norm_for(set, cfg));
    let mut rng = rng_for(seed, 21);
    let k = set.items.len() as f64;
    let (mut gain, mut plausibility, mut robustness) = (0.0, 0.0, 0.0);
    for item in &set.items {
        let theta = &item.encoded;
        gain += payoff.gain(x, theta);
        plausibility += training.nearest_sq(theta).sqrt();
        robustness += single_feature_robustness(model, encoder, theta, cfg.epsilon, cfg.n, &mut rng);
    }
    Ok(Metrics {
        gain: gain / k,
        plausibility: plausibility / k,
        robustness: robustness / k,
        diversity: objective::diversity(&set.points()),
    })
}

/// Metrics of leaving `x` unchanged, used when a method finds nothing.
pub fn identity_metrics(
    x: &[f64],
    model: &Predictor,
    encoder: &Encoder,
    training: &NeighborIndex,
    cfg: &EvalConfig,
    seed: u64,
) -> Metrics {
    let mut rng = rng_for(seed, 21);
    Metrics {
        gain: 0.0,
        plausibility: training.nearest_sq(x).sqrt(),
        robustness: single_feature_robustness(model, encoder, x, cfg.epsilon, cfg.n, &mut rng),
        diversity: 0.0,
    }
}
