use statrs::distribution::{Beta, ContinuousCDF};

use super::{finish, substitution_item};
use crate::data::{Action, BlockKind, Dataset};
use crate::objective::NeighborIndex;
use crate::predictors::Predictor;
use crate::sgen::{EngineConfig, ExplanationSet, Problem};
use crate::{rng_for, Error, Result};

/// Values are clipped into this support before fitting.
const SUPPORT: f64 = 1e-6;

/// Method-of-moments Beta fit of scaled values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaFit {
    /// `None` when the sample is empty, constant, or too dispersed for a Beta.
    pub fn fit(values: &[f64]) -> Option<BetaFit> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let clipped: Vec<f64> = values.iter().map(|v| v.clamp(SUPPORT, 1.0 - SUPPORT)).collect();
        let mean = clipped.iter().sum::<f64>() / n;
        let var = clipped.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var <= 0.0 || var >= mean * (1.0 - mean) {
            return None;
        }
        let common = mean * (1.0 - mean) / var - 1.0;
        Some(BetaFit {
            alpha: mean * common,
            beta: (1.0 - mean) * common,
        })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Smaller of the two tail masses on either side of `v`.
    pub fn probability(&self, v: f64) -> f64 {
        let dist = Beta::new(self.alpha, self.beta).expect("fitted parameters are positive");
        let c = dist.cdf(v.clamp(SUPPORT, 1.0 - SUPPORT));
        c.min(1.0 - c)
    }
}

/// Per-coordinate model of the opposite class: probability of the current
/// value and the expected value to move to.
struct Target {
    coord: usize,
    probability: f64,
    value: f64,
}

fn level_of(block: &crate::data::Block, row: &[f64]) -> usize {
    block.read(row).round().max(0.0) as usize
}

/// Opposite-class targets for every actionable coordinate that can be
/// modelled, least probable first, plus warnings for skipped features.
fn targets(problem: &Problem, data: &Dataset) -> (Vec<Target>, Vec<String>) {
    let schema = data.encoder.schema();
    let x = &problem.x;
    let opposite: Vec<&[f64]> = data.rows().filter(|r| !problem.model.is_positive(r)).collect();
    let mut warnings = Vec::new();
    if opposite.is_empty() {
        warnings.push("the model predicts no training row as negative; nothing to move toward".to_string());
        return (Vec::new(), warnings);
    }
    let mut out = Vec::new();
    for (k, c) in problem.space.coords().iter().enumerate() {
        let name = &schema.features[c.feature].name;
        match c.block.kind {
            BlockKind::Continuous { .. } => {
                let values: Vec<f64> = opposite.iter().map(|r| r[c.block.offset]).collect();
                match BetaFit::fit(&values) {
                    Some(fit) => out.push(Target {
                        coord: k,
                        probability: fit.probability(c.current),
                        value: c.clamp(fit.mean()),
                    }),
                    None => warnings.push(format!("skipped `{name}`: no Beta fit for a degenerate sample")),
                }
            }
            BlockKind::Ordinal { levels } | BlockKind::OneHot { levels } => {
                let mut counts = vec![0usize; levels];
                for r in &opposite {
                    counts[level_of(&c.block, r).min(levels - 1)] += 1;
                }
                let mode = (0..levels).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).expect("levels > 0");
                let current = level_of(&c.block, x).min(levels - 1);
                let value = match c.block.kind {
                    BlockKind::Ordinal { .. } => mode as f64 / (levels.max(2) - 1) as f64,
                    _ => mode as f64,
                };
                out.push(Target {
                    coord: k,
                    probability: counts[current] as f64 / opposite.len() as f64,
                    value: c.clamp(value),
                });
            }
        }
    }
    // Least probable first; ties keep schema order.
    out.sort_by(|a, b| a.probability.total_cmp(&b.probability));
    (out, warnings)
}

pub fn piece_star(
    x: &[f64],
    model: &Predictor,
    data: &Dataset,
    m: usize,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let neighbors = NeighborIndex::from_dataset(data, false)?;
    let problem = Problem::new(x, model, &data.encoder, &cfg.objective, Some(&neighbors), false)?;
    let (targets, warnings) = targets(&problem, data);

    let mut state: Action = problem.space.identity();
    let mut prefixes: Vec<Action> = Vec::new();
    for t in &targets {
        let mut next = state.clone();
        next.values[t.coord] = t.value;
        if next.values == state.values {
            continue;
        }
        if !model.is_positive(&problem.space.apply(&next)) {
            break;
        }
        state = next;
        prefixes.push(state.clone());
    }

    let mut rng = rng_for(seed, 12);
    let items = prefixes
        .into_iter()
        .rev()
        .map(|a| substitution_item(&problem, a, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    finish(&problem, "piece_star", seed, m, items, warnings, serde_json::to_value(cfg)?)
}

/// Actionable features in the order `piece_star` visits them.
pub fn modification_order(x: &[f64], model: &Predictor, data: &Dataset, cfg: &EngineConfig) -> Result<Vec<String>> {
    let problem = Problem::new(x, model, &data.encoder, &cfg.objective, None, false)?;
    let schema = data.encoder.schema();
    Ok(targets(&problem, data)
        .0
        .iter()
        .map(|t| schema.features[problem.space.coords()[t.coord].feature].name.clone())
        .collect())
}
