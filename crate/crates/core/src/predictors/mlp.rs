use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::sigmoid;
use crate::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 16,
            epochs: 3000,
            learning_rate: 0.02,
            l2: 1e-5,
        }
    }
}

/// One tanh hidden layer and a sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `hidden x inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub inputs: usize,
}

impl Mlp {
    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .chunks_exact(self.inputs)
            .zip(&self.b1)
            .map(|(row, b)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).tanh())
            .collect()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let a = self.activations(x);
        sigmoid(a.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let a = self.activations(x);
        let s = sigmoid(a.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2);
        let ds = s * (1.0 - s);
        let mut g = vec![0.0; self.inputs];
        for (j, row) in self.w1.chunks_exact(self.inputs).enumerate() {
            let back = ds * self.w2[j] * (1.0 - a[j] * a[j]);
            for (gi, w) in g.iter_mut().zip(row) {
                *gi += back * w;
            }
        }
        g
    }

    /// Full-batch Adam on the mean log-loss from a seeded Gaussian init.
    pub fn fit(xs: &[&[f64]], ys: &[u8], cfg: &MlpConfig, rng: &mut Rng) -> Self {
        let d = xs[0].len();
        let h = cfg.hidden.max(1);
        let mut normal = |scale: f64| -> f64 {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        };
        let s1 = (2.0 / (d as f64 + 1.0)).sqrt().max(1.0);
        let s2 = (1.0 / h as f64).sqrt();
        let mut net = Mlp {
            w1: (0..h * d).map(|_| normal(s1)).collect(),
            b1: (0..h).map(|_| normal(0.5)).collect(),
            w2: (0..h).map(|_| normal(s2)).collect(),
            b2: 0.0,
            inputs: d,
        };

        let n_params = h * d + h + h + 1;
        let mut m = vec![0.0; n_params];
        let mut v = vec![0.0; n_params];
        let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
        let n = xs.len() as f64;
        let mut grad = vec![0.0; n_params];
        for t in 1..=cfg.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            {
                let (gw1, rest) = grad.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(h);
                for (x, &y) in xs.iter().zip(ys) {
                    let a = net.activations(x);
                    let s = sigmoid(a.iter().zip(&net.w2).map(|(a, w)| a * w).sum::<f64>() + net.b2);
                    let r = s - f64::from(y);
                    gb2[0] += r;
                    for j in 0..h {
                        gw2[j] += r * a[j];
                        let back = r * net.w2[j] * (1.0 - a[j] * a[j]);
                        gb1[j] += back;
                        for (g, xi) in gw1[j * d..(j + 1) * d].iter_mut().zip(x.iter()) {
                            *g += back * xi;
                        }
                    }
                }
            }
            let params = net
                .w1
                .iter_mut()
                .chain(net.b1.iter_mut())
                .chain(net.w2.iter_mut())
                .chain(std::iter::once(&mut net.b2));
            let bc1 = 1.0 - f64::powi(beta1, t as i32);
            let bc2 = 1.0 - f64::powi(beta2, t as i32);
            for (k, p) in params.enumerate() {
                let g = grad[k] / n + cfg.l2 * *p;
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                *p -= cfg.learning_rate * (m[k] / bc1) / ((v[k] / bc2).sqrt() + eps);
            }
        }
        net
    }
}
