//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use rand::Rng as _;
use semifactual::data::{ActionSpace, Direction, Encoder, Encoding, FeatureSchema, FeatureSpec, Polarity};
use semifactual::linalg::Norm;
use semifactual::objective::Payoff;
use semifactual::predictors::Predictor;
use semifactual::rng_for;

/// A small problem with a linear logistic model over unit-range continuous
/// features, every one of them actionable.
pub struct LinearProblem {
    pub name: String,
    pub encoder: Encoder,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub x: Vec<f64>,
}

impl LinearProblem {
    pub fn new(name: &str, features: Vec<FeatureSpec>, weights: Vec<f64>, bias: f64, x: Vec<f64>) -> Self {
        let ranges = vec![(0.0, 1.0); features.len()];
        let schema = FeatureSchema::new(features, "y").unwrap();
        LinearProblem {
            name: name.into(),
            encoder: Encoder::new(schema, Encoding::Ordinal, &ranges).unwrap(),
            weights,
            bias,
            x,
        }
    }

    pub fn model(&self) -> Predictor {
        Predictor::logistic(self.weights.clone(), self.bias, 0.5)
    }

    pub fn names(&self) -> Vec<String> {
        self.encoder.schema().features.iter().map(|f| f.name.clone()).collect()
    }

    /// Exact share of the `eps`-ball (L2, over every feature) around `theta`
    /// that stays on the positive side of the hyperplane. Valid for one or
    /// two features when the ball does not reach the domain edges.
    pub fn true_fraction(&self, theta: &[f64], eps: f64) -> f64 {
        let norm = self.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let d = (semifactual::linalg::dot(&self.weights, theta) + self.bias) / norm;
        match self.weights.len() {
            1 => ((d + eps) / (2.0 * eps)).clamp(0.0, 1.0),
            2 => {
                if d >= eps {
                    1.0
                } else if d <= -eps {
                    0.0
                } else {
                    let h = d.abs();
                    let cap = (eps * eps * (h / eps).acos() - h * (eps * eps - h * h).sqrt())
                        / (std::f64::consts::PI * eps * eps);
                    if d >= 0.0 {
                        1.0 - cap
                    } else {
                        cap
                    }
                }
            }
            _ => panic!("closed form covers one or two features"),
        }
    }

    /// Best gain over a grid of step `step` on the feasible box, among points
    /// that are positive and keep at least `min_fraction` of their ball.
    pub fn grid_oracle(&self, norm: Norm, eps: f64, min_fraction: f64, step: f64) -> (f64, Vec<f64>) {
        let space = ActionSpace::new(&self.x, &self.encoder).unwrap();
        let payoff = Payoff::new(&self.encoder, norm);
        let model = self.model();
        let axes: Vec<Vec<f64>> = space
            .coords()
            .iter()
            .map(|c| {
                let n = ((c.hi - c.lo) / step).round() as usize;
                (0..=n).map(|i| (c.lo + i as f64 * step).min(c.hi)).collect()
            })
            .collect();
        let mut best = (f64::NEG_INFINITY, self.x.clone());
        let mut idx = vec![0usize; axes.len()];
        loop {
            let mut action = space.identity();
            for (k, &i) in idx.iter().enumerate() {
                action.values[k] = axes[k][i];
            }
            let theta = space.apply(&action);
            if model.label(&theta) == 1 && self.true_fraction(&theta, eps) >= min_fraction {
                let g = payoff.gain(&self.x, &theta);
                if g > best.0 {
                    best = (g, theta);
                }
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// The one-dimensional problem: x = 0.9, boundary at 0.5, decrease only.
pub fn one_dim_decrease() -> LinearProblem {
    LinearProblem::new(
        "1d-decrease",
        vec![FeatureSpec::continuous("f").action(Direction::Decrease, Polarity::Negative)],
        vec![10.0],
        -5.0,
        vec![0.9],
    )
}

/// Oracle problems with one or two actionable features: fixed one-dimensional
/// cases plus seeded random two-dimensional ones whose feasible box keeps the
/// robustness ball inside the unit square.
pub fn oracle_suite(random_2d: usize) -> Vec<LinearProblem> {
    let mut out = vec![
        one_dim_decrease(),
        LinearProblem::new(
            "1d-increase",
            vec![FeatureSpec::continuous("f").action(Direction::Increase, Polarity::Positive)],
            vec![-8.0],
            5.0,
            vec![0.2],
        ),
        LinearProblem::new(
            "1d-unreachable-boundary",
            vec![FeatureSpec::continuous("f")
                .action(Direction::Increase, Polarity::Positive)
                .with_max_change(0.3)],
            vec![-4.0],
            3.5,
            vec![0.3],
        ),
    ];
    let mut rng = rng_for(2024, 0);
    for i in 0..random_2d {
        let mut features = Vec::new();
        let mut x = Vec::new();
        for name in ["f", "g"] {
            let (dir, pol) = if rng.random::<bool>() {
                (Direction::Increase, Polarity::Positive)
            } else {
                (Direction::Decrease, Polarity::Negative)
            };
            features.push(FeatureSpec::continuous(name).action(dir, pol).with_max_change(0.3));
            x.push(rng.random_range(0.35..0.65));
        }
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let scale = rng.random_range(6.0..15.0);
        let w = vec![scale * angle.cos(), scale * angle.sin()];
        let margin = rng.random_range(0.08..0.3);
        let bias = -semifactual::linalg::dot(&w, &x) + margin * scale;
        out.push(LinearProblem::new(&format!("2d-random-{i}"), features, w, bias, x));
    }
    out
}
