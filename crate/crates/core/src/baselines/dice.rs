use serde::{Deserialize, Serialize};

use super::{finish, substitution_item};
use crate::data::{Action, CoordKind, Encoder};
use crate::linalg::sq_distance;
use crate::objective::NeighborIndex;
use crate::predictors::Predictor;
use crate::sgen::{EngineConfig, ExplanationSet, Problem};
use crate::{rng_for, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiceConfig {
    /// Random restarts per requested explanation.
    pub restarts_per_m: usize,
    pub min_restarts: usize,
    /// Grid resolution of the walk back from a counterfactual.
    pub scan_steps: usize,
    pub bisection_steps: usize,
    /// Fallback step, as a fraction of each feasible interval.
    pub fallback_fraction: f64,
}

impl Default for DiceConfig {
    fn default() -> Self {
        DiceConfig {
            restarts_per_m: 100,
            min_restarts: 300,
            scan_steps: 100,
            bisection_steps: 40,
            fallback_fraction: 0.01,
        }
    }
}

impl DiceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scan_steps == 0 || !(0.0..=1.0).contains(&self.fallback_fraction) {
            return Err(Error::Config("dice scan_steps must be positive and fallback_fraction in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Point at fraction `t` of the way from `from` to `to`; levels switch at the midpoint.
fn lerp(problem: &Problem, from: &Action, to: &Action, t: f64) -> Action {
    let values = problem
        .space
        .coords()
        .iter()
        .zip(from.values.iter().zip(&to.values))
        .map(|(c, (&a, &b))| match c.kind {
            CoordKind::Real => a + t * (b - a),
            CoordKind::Level => {
                if t < 0.5 {
                    a
                } else {
                    b
                }
            }
        })
        .collect();
    problem.space.clip(&Action::new(values))
}

fn negative(problem: &Problem, a: &Action) -> bool {
    !problem.model.is_positive(&problem.space.apply(a))
}

/// Counterfactual from a random restart: sparsified by reverting coordinates
/// that are not needed, then pulled toward `x` while it stays negative.
fn shrink(problem: &Problem, mut cf: Action, rng: &mut crate::Rng, bisection: usize) -> Action {
    use rand::seq::SliceRandom;
    let identity = problem.space.identity();
    let mut order: Vec<usize> = (0..cf.values.len()).collect();
    order.shuffle(rng);
    for k in order {
        if cf.values[k] == identity.values[k] {
            continue;
        }
        let mut trial = cf.clone();
        trial.values[k] = identity.values[k];
        if negative(problem, &trial) {
            cf = trial;
        }
    }
    // Largest t in [0, 1] along cf -> x that is still negative.
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..bisection {
        let mid = 0.5 * (lo + hi);
        if negative(problem, &lerp(problem, &cf, &identity, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lerp(problem, &cf, &identity, lo)
}

/// First positive point on the segment from a counterfactual back to `x`.
fn back_across(problem: &Problem, cf: &Action, cfg: &DiceConfig) -> Action {
    let identity = problem.space.identity();
    let mut prev = 0.0;
    for i in 1..=cfg.scan_steps {
        let t = i as f64 / cfg.scan_steps as f64;
        if !negative(problem, &lerp(problem, cf, &identity, t)) {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..cfg.bisection_steps {
                let mid = 0.5 * (lo + hi);
                if negative(problem, &lerp(problem, cf, &identity, mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lerp(problem, cf, &identity, hi);
        }
        prev = t;
    }
    identity
}

/// Greedy max-min selection of `m` points, starting from the one closest to `x`.
fn diverse(points: &[Vec<f64>], x: &[f64], m: usize) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let first = (0..points.len())
        .min_by(|&a, &b| sq_distance(&points[a], x).total_cmp(&sq_distance(&points[b], x)))
        .expect("non-empty");
    let mut chosen = vec![first];
    while chosen.len() < m.min(points.len()) {
        let next = (0..points.len())
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| {
                let da = chosen.iter().map(|&c| sq_distance(&points[a], &points[c])).fold(f64::INFINITY, f64::min);
                let db = chosen.iter().map(|&c| sq_distance(&points[b], &points[c])).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("candidates remain");
        chosen.push(next);
    }
    chosen
}

pub fn dice_star(
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
    let dc = &cfg.baselines.dice;
    dc.validate()?;
    let problem = Problem::new(x, model, encoder, &cfg.objective, training, false)?;
    let mut rng = rng_for(seed, 11);

    let restarts = (dc.restarts_per_m * m).max(dc.min_restarts);
    let mut cfs: Vec<Action> = Vec::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    for _ in 0..restarts {
        let a = problem.space.sample(&mut rng);
        if !negative(&problem, &a) {
            continue;
        }
        let cf = shrink(&problem, a, &mut rng, dc.bisection_steps);
        let theta = problem.space.apply(&cf);
        if points.iter().all(|p| crate::linalg::linf_distance(p, &theta) > crate::sgen::UNIQUE_TOL) {
            points.push(theta);
            cfs.push(cf);
        }
    }

    let mut warnings = Vec::new();
    let mut items = Vec::new();
    if cfs.is_empty() {
        warnings.push("no counterfactual found; fell back to a minimal step".to_string());
        let step = Action::new(
            problem
                .space
                .coords()
                .iter()
                .map(|c| match c.kind {
                    CoordKind::Real => c.clamp(c.current + c.gain_sign * dc.fallback_fraction * c.width()),
                    CoordKind::Level => c.current,
                })
                .collect(),
        );
        if !negative(&problem, &step) && !problem.space.is_no_change(&step) {
            items.push(substitution_item(&problem, step, &mut rng)?);
        }
    } else {
        for i in diverse(&points, x, m) {
            let sf = back_across(&problem, &cfs[i], dc);
            if !problem.space.is_no_change(&sf) {
                items.push(substitution_item(&problem, sf, &mut rng)?);
            }
        }
    }
    finish(&problem, "dice_star", seed, m, items, warnings, serde_json::to_value(cfg)?)
}
