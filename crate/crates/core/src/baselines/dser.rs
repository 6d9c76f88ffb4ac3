use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::finish;
use crate::data::{CoordKind, Encoder};
use crate::linalg::{argmax, l2, project_simplex, sub};
use crate::objective::NeighborIndex;
use crate::predictors::Predictor;
use crate::sgen::{EngineConfig, ExplanationSet, Problem};
use crate::{rng_for, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DserConfig {
    pub iterations: usize,
    /// Initial ascent step (scaled units); halved on every rejected step.
    pub step: f64,
    pub min_step: f64,
    /// Weight of the push away from earlier solutions.
    pub repulsion: f64,
}

impl Default for DserConfig {
    fn default() -> Self {
        DserConfig {
            iterations: 200,
            step: 0.1,
            min_step: 1e-4,
            repulsion: 1.0,
        }
    }
}

impl DserConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.min_step > 0.0 && self.repulsion >= 0.0) {
            return Err(Error::Config("dser step and min_step must be positive, repulsion >= 0".into()));
        }
        Ok(())
    }
}

/// Projects a relaxed vector back onto the feasible set: real coordinates are
/// clamped, one-hot blocks projected onto the simplex of allowed levels.
fn project_relaxed(problem: &Problem, z: &mut [f64]) {
    for c in problem.space.coords() {
        match c.kind {
            CoordKind::Real => z[c.block.offset] = c.clamp(z[c.block.offset]),
            CoordKind::Level => {
                let (lo, hi) = (c.lo as usize, c.hi as usize);
                let cols = c.block.columns();
                let allowed: Vec<f64> = (lo..=hi).map(|l| z[cols.start + l]).collect();
                let projected = project_simplex(&allowed);
                for col in cols.clone() {
                    z[col] = 0.0;
                }
                for (l, v) in (lo..=hi).zip(projected) {
                    z[cols.start + l] = v;
                }
            }
        }
    }
}

/// Valid encoding nearest to a relaxed point: each one-hot block set to its
/// largest allowed entry.
fn discretize(problem: &Problem, z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    for c in problem.space.coords() {
        if c.kind == CoordKind::Level {
            let cols = c.block.columns();
            let (lo, hi) = (c.lo as usize, c.hi as usize);
            let level = lo + argmax(&z[cols.start + lo..=cols.start + hi]);
            for col in cols.clone() {
                out[col] = 0.0;
            }
            out[cols.start + level] = 1.0;
        }
    }
    out
}

fn columns(problem: &Problem) -> Vec<usize> {
    problem.space.coords().iter().flat_map(|c| c.block.columns()).collect()
}

/// One hill climb from `x`, maximising distance from `x` plus distance from
/// the nearest earlier solution, keeping both the relaxed point and its
/// discretisation positive.
fn climb(problem: &Problem, found: &[Vec<f64>], cfg: &DserConfig, rng: &mut crate::Rng) -> Vec<f64> {
    let x = &problem.x;
    let cols = columns(problem);
    let threshold = problem.threshold();
    let ok = |z: &[f64]| problem.model.score(z) > threshold && problem.model.score(&discretize(problem, z)) > threshold;

    let mut z = x.clone();
    let mut step = cfg.step;
    for _ in 0..cfg.iterations {
        if step < cfg.min_step {
            break;
        }
        let mut dir = vec![0.0; x.len()];
        let away = sub(&z, x);
        let away_norm = l2(&away);
        if away_norm > 1e-12 {
            for &c in &cols {
                dir[c] += away[c] / away_norm;
            }
        } else {
            // First move: toward positive gain on real coordinates, a random level elsewhere.
            for c in problem.space.coords() {
                match c.kind {
                    CoordKind::Real => dir[c.block.offset] += c.gain_sign * rng.random_range(0.0..1.0),
                    CoordKind::Level => {
                        let level = rng.random_range(c.lo as usize..=c.hi as usize);
                        dir[c.block.offset + level] += 1.0;
                    }
                }
            }
        }
        if let Some(nearest) = found
            .iter()
            .min_by(|a, b| crate::linalg::sq_distance(a, &z).total_cmp(&crate::linalg::sq_distance(b, &z)))
        {
            let push = sub(&z, nearest);
            let n = l2(&push);
            if n > 1e-12 {
                for &c in &cols {
                    dir[c] += cfg.repulsion * push[c] / n;
                }
            } else {
                for &c in &cols {
                    dir[c] += cfg.repulsion * rng.random_range(-1.0..1.0);
                }
            }
        }
        let norm = l2(&dir).max(1e-12);
        let mut next = z.clone();
        for &c in &cols {
            next[c] += step * dir[c] / norm;
        }
        project_relaxed(problem, &mut next);
        if ok(&next) {
            z = next;
        } else {
            step *= 0.5;
        }
    }
    discretize(problem, &z)
}

pub fn dser_star(
    x: &[f64],
    model: &Predictor,
    encoder: &Encoder,
    training: Option<&NeighborIndex>,
    m: usize,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let dc = &cfg.baselines.dser;
    dc.validate()?;
    let problem = Problem::new(x, model, encoder, &cfg.objective, training, false)?;
    let mut rng = rng_for(seed, 13);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut items = Vec::new();
    for _ in 0..m {
        let theta = climb(&problem, &found, dc, &mut rng);
        let action = problem.space.action_of(&theta);
        found.push(theta.clone());
        if problem.space.is_no_change(&action) || !model.is_positive(&theta) {
            continue;
        }
        let robustness = problem.robustness_sampled(&theta, &mut rng);
        items.push(problem.item(action, theta, robustness, None)?);
    }
    finish(&problem, "dser_star", seed, m, items, Vec::new(), serde_json::to_value(cfg)?)
}
