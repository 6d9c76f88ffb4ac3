use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{l2, sub};
use crate::objective::ball_offsets;
use crate::predictors::Predictor;
use crate::{rng_for, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialConfig {
    pub restarts: usize,
    /// Linearised boundary steps per restart.
    pub max_steps: usize,
    /// Relative overshoot of each linearised step.
    pub overshoot: f64,
    pub bisection_steps: usize,
    /// Rounds of re-aiming along the boundary normal.
    pub refinements: usize,
    /// Random directions searched for models without a gradient.
    pub random_rays: usize,
    /// Furthest distance searched along a ray (scaled units).
    pub max_radius: f64,
    /// Samples per ray before bisection.
    pub ray_steps: usize,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            restarts: 10,
            max_steps: 100,
            overshoot: 0.02,
            bisection_steps: 60,
            refinements: 10,
            random_rays: 200,
            max_radius: 2.0,
            ray_steps: 200,
        }
    }
}

impl AdversarialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ray_steps == 0 || !(self.max_radius > 0.0) {
            return Err(crate::Error::Config("adversarial ray_steps and max_radius must be positive".into()));
        }
        Ok(())
    }
}

/// Smallest perturbation found that flips a positive prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adversarial {
    /// Distance to the nearest flip found; infinite when none was found.
    pub radius: f64,
    /// True when no flip was found within the tested radius.
    pub pass: bool,
}

struct Probe<'a> {
    model: &'a Predictor,
    theta: &'a [f64],
    cfg: &'a AdversarialConfig,
}

impl Probe<'_> {
    fn flipped(&self, p: &[f64]) -> bool {
        !self.model.is_positive(p)
    }

    fn along(&self, dir: &[f64], t: f64) -> Vec<f64> {
        self.theta.iter().zip(dir).map(|(v, d)| v + t * d).collect()
    }

    /// Boundary crossing on the segment `theta + t * dir`, `t` in `(lo, hi]`,
    /// given that `hi` is flipped.
    fn bisect(&self, dir: &[f64], mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..self.cfg.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if self.flipped(&self.along(dir, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// First flip along a unit direction, searched up to `limit`.
    fn ray(&self, dir: &[f64], limit: f64) -> Option<f64> {
        let steps = self.cfg.ray_steps;
        let mut prev = 0.0;
        for i in 1..=steps {
            let t = limit * i as f64 / steps as f64;
            if self.flipped(&self.along(dir, t)) {
                return Some(self.bisect(dir, prev, t));
            }
            prev = t;
        }
        None
    }

    /// Linearised steps from `start` until the label flips.
    fn descend(&self, start: Vec<f64>) -> Option<Vec<f64>> {
        let psi = self.model.psi;
        let mut p = start;
        for _ in 0..self.cfg.max_steps {
            if self.flipped(&p) {
                return Some(p);
            }
            let g = self.model.gradient(&p);
            let gg: f64 = g.iter().map(|v| v * v).sum();
            if gg < 1e-24 {
                return None;
            }
            let s = self.model.score(&p);
            let scale = (1.0 + self.cfg.overshoot) * (s - psi).max(1e-9) / gg;
            for (v, gi) in p.iter_mut().zip(&g) {
                *v -= scale * gi;
            }
        }
        self.flipped(&p).then_some(p)
    }

    /// Distance to the boundary along the segment from `theta` to a flipped point.
    fn segment_radius(&self, flipped: &[f64]) -> Option<(f64, Vec<f64>)> {
        let d = sub(flipped, self.theta);
        let len = l2(&d);
        if len == 0.0 {
            return None;
        }
        let dir: Vec<f64> = d.iter().map(|v| v / len).collect();
        let t = self.bisect(&dir, 0.0, len);
        Some((t, dir))
    }
}

/// Probes how far `theta` is from its nearest label flip. Perturbations are
/// unconstrained in every column. Models with an analytic gradient use
/// restarted linearised descent, refined along the boundary normal; the rest
/// use line searches along coordinate and random directions. The result is
/// an upper bound on the true minimal radius; `pass` iff it exceeds `epsilon`.
pub fn adversarial_radius(
    model: &Predictor,
    theta: &[f64],
    epsilon: f64,
    cfg: &AdversarialConfig,
    seed: u64,
) -> Adversarial {
    if !model.is_positive(theta) {
        return Adversarial {
            radius: 0.0,
            pass: false,
        };
    }
    let probe = Probe { model, theta, cfg };
    let dim = theta.len();
    let mut rng = rng_for(seed, 31);
    let mut best = f64::INFINITY;
    let limit = |best: f64| best.min(cfg.max_radius);

    for c in 0..dim {
        for sign in [1.0, -1.0] {
            let mut dir = vec![0.0; dim];
            dir[c] = sign;
            if let Some(t) = probe.ray(&dir, limit(best)) {
                best = best.min(t);
            }
        }
    }

    if model.has_analytic_gradient() {
        let offsets = ball_offsets(dim, epsilon / 2.0, cfg.restarts, crate::linalg::Norm::L2, &mut rng);
        for (r, offset) in offsets.iter().enumerate() {
            let start: Vec<f64> = if r == 0 {
                theta.to_vec()
            } else {
                theta.iter().zip(offset).map(|(v, o)| v + o).collect()
            };
            let Some(hit) = probe.descend(start) else { continue };
            let Some((mut t, _)) = probe.segment_radius(&hit) else { continue };
            // Re-aim from theta along the normal at the boundary point found.
            let mut boundary = hit;
            for _ in 0..cfg.refinements {
                let (_, dir) = probe.segment_radius(&boundary).expect("boundary differs from theta");
                let at = probe.along(&dir, t);
                let g = model.gradient(&at);
                let n = l2(&g);
                if n < 1e-12 {
                    break;
                }
                let normal: Vec<f64> = g.iter().map(|v| -v / n).collect();
                match probe.ray(&normal, (1.5 * t).min(cfg.max_radius)) {
                    Some(t2) if t2 < t - 1e-12 => {
                        t = t2;
                        boundary = probe.along(&normal, t2);
                    }
                    _ => break,
                }
            }
            best = best.min(t);
        }
    } else {
        for _ in 0..cfg.random_rays {
            let d: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = l2(&d).max(1e-12);
            let dir: Vec<f64> = d.iter().map(|v| v / n).collect();
            if let Some(t) = probe.ray(&dir, limit(best)) {
                best = best.min(t);
            }
        }
    }
    Adversarial {
        radius: best,
        pass: best > epsilon,
    }
}
