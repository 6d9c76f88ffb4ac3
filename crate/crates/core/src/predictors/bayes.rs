use serde::{Deserialize, Serialize};

use crate::data::{Block, BlockKind};
use crate::linalg::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesConfig {
    /// Added to every variance, as a fraction of the largest per-feature variance.
    pub var_smoothing: f64,
    /// Pseudo-count for categorical level frequencies.
    pub alpha: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            var_smoothing: 1e-9,
            alpha: 1.0,
        }
    }
}

/// Per-block class-conditional parameters, indexed `[class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Gaussian { column: usize, mean: [f64; 2], var: [f64; 2] },
    /// One-hot block: the log-likelihood is linear in the (possibly relaxed) block.
    OneHot { offset: usize, log_p: [Vec<f64>; 2] },
    /// Ordinal block: log-probabilities interpolated between adjacent levels.
    Ordinal { column: usize, log_p: [Vec<f64>; 2] },
}

/// Naive Bayes with Gaussian continuous and Laplace-smoothed categorical
/// likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub log_prior: [f64; 2],
    pub likelihoods: Vec<Likelihood>,
    /// Set when some feature had zero within-class variance and was floored.
    pub variance_guarded: bool,
}

fn gauss_log(v: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((v - mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
}

fn interp(log_p: &[f64], v: f64) -> f64 {
    let top = (log_p.len() - 1) as f64;
    let pos = (v * top).clamp(0.0, top);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(log_p.len() - 1);
    let t = pos - lo as f64;
    log_p[lo] * (1.0 - t) + log_p[hi] * t
}

impl NaiveBayes {
    fn log_joint(&self, x: &[f64], c: usize) -> f64 {
        let mut s = self.log_prior[c];
        for l in &self.likelihoods {
            s += match l {
                Likelihood::Gaussian { column, mean, var } => gauss_log(x[*column], mean[c], var[c]),
                Likelihood::OneHot { offset, log_p } => {
                    log_p[c].iter().enumerate().map(|(k, lp)| x[offset + k] * lp).sum()
                }
                Likelihood::Ordinal { column, log_p } => interp(&log_p[c], x[*column]),
            };
        }
        s
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_joint(x, 1) - self.log_joint(x, 0))
    }

    pub fn fit(xs: &[&[f64]], ys: &[u8], blocks: &[Block], cfg: &BayesConfig) -> Self {
        let count = [ys.iter().filter(|&&y| y == 0).count(), ys.iter().filter(|&&y| y == 1).count()];
        let n = xs.len() as f64;
        let log_prior = [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()];
        let class_rows = |c: u8| xs.iter().zip(ys).filter(move |(_, &y)| y == c).map(|(x, _)| *x);

        let mut max_var: f64 = 0.0;
        let mut raw = Vec::new();
        for b in blocks {
            match b.kind {
                BlockKind::Continuous { .. } => {
                    let col = b.offset;
                    let mut mean = [0.0; 2];
                    let mut var = [0.0; 2];
                    for c in 0..2 {
                        let vals: Vec<f64> = class_rows(c as u8).map(|x| x[col]).collect();
                        let m = vals.iter().sum::<f64>() / vals.len() as f64;
                        mean[c] = m;
                        var[c] = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
                        max_var = max_var.max(var[c]);
                    }
                    raw.push(Likelihood::Gaussian { column: col, mean, var });
                }
                BlockKind::OneHot { levels } | BlockKind::Ordinal { levels } => {
                    let log_p = [0, 1].map(|c| {
                        let mut freq = vec![cfg.alpha; levels];
                        let mut total = cfg.alpha * levels as f64;
                        for x in class_rows(c as u8) {
                            let level = b.read(x).round().clamp(0.0, (levels - 1) as f64) as usize;
                            freq[level] += 1.0;
                            total += 1.0;
                        }
                        freq.iter().map(|f| (f / total).ln()).collect::<Vec<_>>()
                    });
                    raw.push(match b.kind {
                        BlockKind::OneHot { .. } => Likelihood::OneHot { offset: b.offset, log_p },
                        _ => Likelihood::Ordinal { column: b.offset, log_p },
                    });
                }
            }
        }

        let eps = cfg.var_smoothing * if max_var > 0.0 { max_var } else { 1.0 };
        let mut variance_guarded = false;
        for l in raw.iter_mut() {
            if let Likelihood::Gaussian { var, .. } = l {
                for v in var.iter_mut() {
                    if *v <= 0.0 {
                        variance_guarded = true;
                    }
                    *v += eps;
                }
            }
        }
        NaiveBayes {
            log_prior,
            likelihoods: raw,
            variance_guarded,
        }
    }
}
