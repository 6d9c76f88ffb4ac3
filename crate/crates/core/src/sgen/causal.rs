//! Projected-gradient maximin through a linear structural causal model.
//!
//! One run per action subset (every single actionable feature, plus all of
//! them together). Each run ascends the Lagrangian in the intervention values
//! while the multiplier decays, and stops at the last step whose semifactual
//! and whole Monte Carlo neighbourhood kept the positive label.

use serde::{Deserialize, Serialize};

use super::{complement, empty_result, push_unique, EngineConfig, ExplanationSet, Problem};
use crate::data::Encoder;
use crate::linalg::Norm;
use crate::objective::{self, NeighborIndex};
use crate::predictors::Predictor;
use crate::scm::Scm;
use crate::{rng_for, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CausalConfig {
    /// Ascent step size in scaled units.
    pub learning_rate: f64,
    /// Initial Lagrange multiplier.
    pub lambda: f64,
    /// Per-iteration multiplier decay.
    pub eta: f64,
    pub max_iter: usize,
    /// First step, as a fraction of each feasible interval.
    pub init_fraction: f64,
    /// Steps shorter than this end the run.
    pub tolerance: f64,
}

impl Default for CausalConfig {
    fn default() -> Self {
        CausalConfig {
            learning_rate: 0.01,
            lambda: 1.0,
            eta: 0.9,
            max_iter: 500,
            init_fraction: 0.1,
            tolerance: 1e-6,
        }
    }
}

impl CausalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.lambda >= 0.0 && (0.0..=1.0).contains(&self.eta)) {
            return Err(Error::Config("causal learning_rate must be positive, lambda >= 0, eta in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.init_fraction) || self.max_iter == 0 {
            return Err(Error::Config("causal init_fraction must lie in [0, 1] and max_iter be positive".into()));
        }
        Ok(())
    }
}

/// Action subsets searched by the causal engine: each coordinate alone, then
/// all coordinates together.
pub fn action_subsets(dim: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (0..dim).map(|k| vec![k]).collect();
    if dim > 1 {
        subsets.push((0..dim).collect());
    }
    subsets
}

struct Run {
    accepted: Option<(Vec<f64>, f64)>,
    lambdas: Vec<f64>,
    iterations: usize,
}

/// Generates one semifactual per action subset for `x`, with end states
/// computed through `scm`. The encoder must give one column per feature.
pub fn explain_causal(
    x: &[f64],
    model: &Predictor,
    scm: &Scm,
    encoder: &Encoder,
    training: Option<&NeighborIndex>,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    if encoder.blocks().iter().any(|b| !b.is_scalar()) {
        return Err(Error::Unsupported(
            "the causal engine needs ordinal encoding (one column per feature)".into(),
        ));
    }
    if scm.len() != encoder.width() {
        return Err(Error::WidthMismatch {
            expected: encoder.width(),
            got: scm.len(),
        });
    }
    cfg.causal.validate()?;
    let problem = Problem::new(x, model, encoder, &cfg.objective, training, true)?;
    let space = &problem.space;
    let schema = encoder.schema();
    let all_nodes: Vec<usize> = space.coords().iter().map(|c| c.block.offset).collect();
    let jac_all = scm.jacobian(&all_nodes);

    let subsets = action_subsets(space.dim());
    let m = subsets.len();
    let mut items = Vec::new();
    let mut trace = super::SearchTrace::default();
    let (mut evaluated, mut positive) = (0, 0);
    for (run_id, subset) in subsets.iter().enumerate() {
        let run = ascend(&problem, scm, subset, &all_nodes, &jac_all, cfg, seed, run_id as u64)?;
        trace.lambdas.push(run.lambdas);
        trace.iterations.push(run.iterations);
        evaluated += 1;
        let Some((values, robustness_mc)) = run.accepted else {
            trace
                .skipped_subsets
                .push(subset.iter().map(|&k| schema.features[space.coords()[k].feature].name.clone()).collect());
            continue;
        };
        positive += 1;
        let action = space.restricted(&values, subset);
        let interventions: Vec<(usize, f64)> = subset.iter().zip(&values).map(|(&k, &v)| (all_nodes[k], v)).collect();
        let theta = scm.process(x, &interventions)?;
        if space.is_no_change(&action) || problem.payoff.gain(x, &theta) <= 0.0 {
            continue;
        }
        let action_gain = problem.payoff.gain(x, &space.apply(&action));
        push_unique(&mut items, problem.item(action, theta, robustness_mc, Some(action_gain))?);
    }
    if items.is_empty() {
        return Err(empty_result(
            evaluated,
            positive,
            0,
            "no action subset reached a positive-gain state without crossing the decision boundary",
        ));
    }
    complement(&mut items, m, &mut rng_for(seed, 3));
    let mut set = problem.set("sgen_causal", seed, m, items, serde_json::to_value(cfg)?);
    set.trace = trace;
    Ok(set)
}

#[allow(clippy::too_many_arguments)]
fn ascend(
    problem: &Problem,
    scm: &Scm,
    subset: &[usize],
    all_nodes: &[usize],
    jac_all: &[Vec<f64>],
    cfg: &EngineConfig,
    seed: u64,
    run_id: u64,
) -> Result<Run> {
    let space = &problem.space;
    let coords = space.coords();
    let obj = &cfg.objective;
    let cc = &cfg.causal;
    let x = &problem.x;
    let threshold = problem.threshold();
    let nodes: Vec<usize> = subset.iter().map(|&k| all_nodes[k]).collect();
    let jac = scm.jacobian(&nodes);
    let mut rng = rng_for(seed, 100 + run_id);
    let gain_norm = problem.payoff.norm();

    let mut a: Vec<f64> = subset
        .iter()
        .map(|&k| {
            let c = &coords[k];
            c.clamp(c.current + c.gain_sign * cc.init_fraction * c.width())
        })
        .collect();
    let mut run = Run {
        accepted: None,
        lambdas: Vec::new(),
        iterations: 0,
    };
    let interventions = |a: &[f64]| -> Vec<(usize, f64)> { nodes.iter().copied().zip(a.iter().copied()).collect() };

    let first = scm.process(x, &interventions(&a))?;
    if model_negative(problem, &first, threshold) || problem.payoff.gain(x, &first) <= 0.0 {
        return Ok(run);
    }

    for t in 0..cc.max_iter {
        let lambda = cc.lambda * cc.eta.powi(t as i32);
        run.lambdas.push(lambda);
        run.iterations = t + 1;
        let theta = scm.process(x, &interventions(&a))?;
        let s = problem.model.score(&theta);
        if s <= threshold {
            break;
        }
        // Neighbourhood: every actionable feature perturbed around the action.
        let mut full: Vec<f64> = coords.iter().map(|c| c.current).collect();
        for (&k, &v) in subset.iter().zip(&a) {
            full[k] = v;
        }
        let offsets = objective::ball_offsets(coords.len(), obj.epsilon, obj.n_mc, obj.neighborhood_norm, &mut rng);
        let mut batch = Vec::with_capacity(offsets.len());
        for o in &offsets {
            let ivs: Vec<(usize, f64)> = all_nodes
                .iter()
                .zip(coords)
                .zip(full.iter().zip(o))
                .map(|((&n, c), (&v, d))| (n, (v + d).clamp(c.domain.0, c.domain.1)))
                .collect();
            batch.push(scm.process(x, &ivs)?);
        }
        if batch.iter().any(|b| !problem.model.is_positive(b)) {
            break;
        }
        run.accepted = Some((a.clone(), 1.0));

        let n = x.len();
        let gate = if problem.payoff.violates(x, &theta) { -1.0 } else { 1.0 };
        let mut direct = vec![0.0; n];
        let grad_sf = problem.model.gradient(&theta);
        for i in 0..n {
            direct[i] = lambda * grad_sf[i] / s.max(objective::BCE_CLAMP);
        }
        let delta: Vec<f64> = theta.iter().zip(x).map(|(t, v)| t - v).collect();
        let magnitude = gain_norm.of(&delta);
        for i in 0..n {
            let intervened = nodes.iter().position(|&c| c == i);
            let d = match gain_norm {
                Norm::L1 => {
                    if delta[i] != 0.0 {
                        delta[i].signum()
                    } else {
                        intervened.map_or(0.0, |j| coords[subset[j]].gain_sign)
                    }
                }
                Norm::L2 => {
                    if magnitude > 0.0 {
                        delta[i] / magnitude
                    } else {
                        intervened.map_or(0.0, |j| coords[subset[j]].gain_sign)
                    }
                }
            };
            direct[i] += gate * d;
        }
        let mut through_batch = vec![0.0; n];
        for b in &batch {
            let sb = problem.model.score(b).max(objective::BCE_CLAMP);
            for (acc, g) in through_batch.iter_mut().zip(problem.model.gradient(b)) {
                *acc += lambda * g / sb / batch.len() as f64;
            }
        }
        let mut step = 0.0;
        let next: Vec<f64> = subset
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let g: f64 = (0..n).map(|i| jac[i][j] * direct[i] + jac_all[i][k] * through_batch[i]).sum();
                let v = coords[k].clamp(a[j] + cc.learning_rate * g);
                step += (v - a[j]).powi(2);
                v
            })
            .collect();
        let moved = space.restricted(&next, subset);
        if step.sqrt() < cc.tolerance && !space.is_no_change(&moved) {
            break;
        }
        a = next;
    }
    Ok(run)
}

fn model_negative(problem: &Problem, theta: &[f64], threshold: f64) -> bool {
    problem.model.score(theta) <= threshold
}
