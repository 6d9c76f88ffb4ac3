use serde::{Deserialize, Serialize};

use crate::linalg::{dot, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 1.0,
            epochs: 3000,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Logistic {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Logistic { weights, bias }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = self.score(x);
        self.weights.iter().map(|w| s * (1.0 - s) * w).collect()
    }

    /// Full-batch gradient descent on the mean log-loss, from zero weights.
    pub fn fit(xs: &[&[f64]], ys: &[u8], cfg: &LogisticConfig) -> Self {
        let d = xs[0].len();
        let n = xs.len() as f64;
        let mut model = Logistic::new(vec![0.0; d], 0.0);
        let mut grad = vec![0.0; d];
        for _ in 0..cfg.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (x, &y) in xs.iter().zip(ys) {
                let r = model.score(x) - f64::from(y);
                for (g, xi) in grad.iter_mut().zip(x.iter()) {
                    *g += r * xi;
                }
                grad_b += r;
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * (g / n + cfg.l2 * *w);
            }
            model.bias -= cfg.learning_rate * grad_b / n;
        }
        model
    }
}
