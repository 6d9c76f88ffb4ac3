use serde::{Deserialize, Serialize};

use super::finish;
use crate::data::{Action, Encoder};
use crate::linalg::l2;
use crate::objective::{ball_offsets, NeighborIndex};
use crate::predictors::Predictor;
use crate::scm::Scm;
use crate::sgen::{EngineConfig, ExplanationSet, Problem};
use crate::{rng_for, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Length of each step toward the boundary (scaled units).
    pub step: f64,
    pub max_iter: usize,
    /// Radius of the end-state neighbourhood checked by `dominguez_star`.
    pub epsilon: f64,
    /// Number of neighbourhood points sampled per step.
    pub probes: usize,
    /// Also probe the linearised worst-case perturbation.
    pub worst_case_probe: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            step: 0.01,
            max_iter: 1000,
            epsilon: 0.1,
            probes: 100,
            worst_case_probe: true,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.epsilon >= 0.0) || self.max_iter == 0 {
            return Err(Error::Config("walk step and max_iter must be positive, epsilon >= 0".into()));
        }
        Ok(())
    }
}

struct Walk<'p, 'a> {
    problem: &'p Problem<'a>,
    scm: &'p Scm,
    nodes: Vec<usize>,
    jac: Vec<Vec<f64>>,
}

impl Walk<'_, '_> {
    fn interventions(&self, a: &[f64]) -> Vec<(usize, f64)> {
        self.nodes.iter().copied().zip(a.iter().copied()).collect()
    }

    fn end_state(&self, x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.scm.process(x, &self.interventions(a))
    }

    fn positive(&self, theta: &[f64]) -> bool {
        self.problem.model.score(theta) > self.problem.threshold()
    }

    /// Perturbed end states: random points of the L2 ball around `theta`
    /// over all features, plus (optionally) the first-order worst case.
    fn probes(&self, theta: &[f64], cfg: &WalkConfig, offsets: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = offsets.iter().map(|o| theta.iter().zip(o).map(|(v, d)| v + d).collect()).collect();
        if cfg.worst_case_probe && cfg.epsilon > 0.0 {
            let grad = self.problem.model.gradient(theta);
            let norm = l2(&grad);
            if norm > 1e-12 {
                out.push(theta.iter().zip(&grad).map(|(v, g)| v - cfg.epsilon * g / norm).collect());
            }
        }
        out
    }

    fn probes_hold(&self, theta: &[f64], cfg: &WalkConfig, offsets: &[Vec<f64>]) -> bool {
        self.probes(theta, cfg, offsets).iter().all(|p| self.positive(p))
    }
}

/// Gradient walk from `x` toward the decision boundary through the causal
/// model, returning the last actions that kept the label (and, with probes,
/// the label of the end state's neighbourhood too).
#[allow(clippy::too_many_arguments)]
fn walk(
    method: &str,
    with_probes: bool,
    x: &[f64],
    model: &Predictor,
    scm: &Scm,
    encoder: &Encoder,
    training: Option<&NeighborIndex>,
    m: usize,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let wc = &cfg.baselines.walk;
    wc.validate()?;
    if encoder.blocks().iter().any(|b| !b.is_scalar()) {
        return Err(Error::Unsupported(format!("{method} needs ordinal encoding (one column per feature)")));
    }
    if scm.len() != encoder.width() {
        return Err(Error::WidthMismatch {
            expected: encoder.width(),
            got: scm.len(),
        });
    }
    let problem = Problem::new(x, model, encoder, &cfg.objective, training, true)?;
    let coords = problem.space.coords();
    let nodes: Vec<usize> = coords.iter().map(|c| c.block.offset).collect();
    let walker = Walk {
        jac: scm.jacobian(&nodes),
        problem: &problem,
        scm,
        nodes,
    };
    let mut rng = rng_for(seed, 14);
    let offsets = if with_probes && wc.probes > 0 {
        ball_offsets(x.len(), wc.epsilon, wc.probes, crate::linalg::Norm::L2, &mut rng)
    } else {
        Vec::new()
    };

    let mut a: Vec<f64> = coords.iter().map(|c| c.current).collect();
    let mut warnings = Vec::new();
    if with_probes && !walker.probes_hold(x, wc, &offsets) {
        warnings.push("the neighbourhood of the individual already crosses the boundary; no action is safe".to_string());
    } else {
        for _ in 0..wc.max_iter {
            let theta = walker.end_state(x, &a)?;
            let grad = model.gradient(&theta);
            let g: Vec<f64> = (0..a.len())
                .map(|k| (0..x.len()).map(|i| walker.jac[i][k] * grad[i]).sum())
                .collect();
            let norm = l2(&g);
            if norm < 1e-12 {
                break;
            }
            let next: Vec<f64> = coords
                .iter()
                .zip(a.iter().zip(&g))
                .map(|(c, (v, gk))| c.clamp(v - wc.step * gk / norm))
                .collect();
            let moved = next.iter().zip(&a).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            if moved < 1e-9 {
                break;
            }
            let next_theta = walker.end_state(x, &next)?;
            if !walker.positive(&next_theta) {
                break;
            }
            if with_probes && !walker.probes_hold(&next_theta, wc, &offsets) {
                break;
            }
            a = next;
        }
    }

    let action = Action::new(a);
    let theta = walker.end_state(x, &action.values)?;
    let mut items = Vec::new();
    if !problem.space.is_no_change(&action) {
        let robustness = problem.robustness_sampled(&theta, &mut rng);
        let action_gain = problem.payoff.gain(x, &problem.space.apply(&action));
        items.push(problem.item(action, theta, robustness, Some(action_gain))?);
    }
    finish(&problem, method, seed, m, items, warnings, serde_json::to_value(cfg)?)
}

/// Recourse walk through `scm`, stopped one step before the boundary.
#[allow(clippy::too_many_arguments)]
pub fn karimi_star(
    x: &[f64],
    model: &Predictor,
    scm: &Scm,
    encoder: &Encoder,
    training: Option<&NeighborIndex>,
    m: usize,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    walk("karimi_star", false, x, model, scm, encoder, training, m, cfg, seed)
}

/// As [`karimi_star`], but also stopped before any point within the probe
/// radius of the end state would cross.
#[allow(clippy::too_many_arguments)]
pub fn dominguez_star(
    x: &[f64],
    model: &Predictor,
    scm: &Scm,
    encoder: &Encoder,
    training: Option<&NeighborIndex>,
    m: usize,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    walk("dominguez_star", true, x, model, scm, encoder, training, m, cfg, seed)
}
