//! Scalar terms of the semifactual objective and their compositions.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Block, BlockKind, Dataset, Encoder};
use crate::linalg::{argmax, Norm};
use crate::predictors::Predictor;
use crate::{Error, Result, Rng};

/// Tolerance below which a move against a feature's polarity is ignored.
pub const POLARITY_TOL: f64 = 1e-9;
/// Scores are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside the log-loss.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Weight of probabilistic robustness in the fitness.
    pub lambda_p: f64,
    /// Weight of absolute robustness in the fitness.
    pub lambda_s: f64,
    /// Diversity weight.
    pub gamma: f64,
    /// Plausibility stabiliser.
    pub gamma_p: f64,
    /// Neighbourhood radius in scaled units.
    pub epsilon: f64,
    /// Monte Carlo samples per neighbourhood.
    pub n_mc: usize,
    /// Added to the threshold when checking the semifactual itself.
    pub psi_margin: f64,
    /// Norm of the gain distance. `None` picks L2 for the genetic engine and
    /// L1 for the causal one.
    pub gain_norm: Option<Norm>,
    /// Shape of the robustness neighbourhood.
    pub neighborhood_norm: Norm,
    /// Measure plausibility against positively labelled training rows only.
    pub plausibility_positive_only: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            lambda_p: 30.0,
            lambda_s: 10.0,
            gamma: 1.0,
            gamma_p: 0.1,
            epsilon: 0.1,
            n_mc: 100,
            psi_margin: 0.0,
            gain_norm: None,
            neighborhood_norm: Norm::L2,
            plausibility_positive_only: false,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.lambda_p >= 0.0 && self.lambda_s >= 0.0 && self.gamma >= 0.0) {
            return bad("lambda_p, lambda_s and gamma must be non-negative");
        }
        if self.gamma_p <= 0.0 || self.gamma_p.is_nan() {
            return bad("gamma_p must be positive");
        }
        if self.epsilon <= 0.0 || self.epsilon.is_nan() {
            return bad("epsilon must be positive");
        }
        if self.n_mc == 0 {
            return bad("n_mc must be at least 1");
        }
        Ok(())
    }
}

/// Polarity-gated distance between an individual and an end state.
#[derive(Debug, Clone)]
pub struct Payoff {
    /// `(block, polarity sign)` for every feature with a non-neutral polarity.
    signed: Vec<(Block, f64)>,
    norm: Norm,
}

impl Payoff {
    pub fn new(encoder: &Encoder, norm: Norm) -> Self {
        let signed = encoder
            .schema()
            .features
            .iter()
            .zip(encoder.blocks())
            .filter(|(f, _)| f.polarity.sign() != 0.0)
            .map(|(f, b)| (*b, f.polarity.sign()))
            .collect();
        Payoff { signed, norm }
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Signed change of a feature: scaled delta, or level-index delta for
    /// one-hot blocks (argmax of each side).
    pub fn feature_change(block: &Block, x: &[f64], theta: &[f64]) -> f64 {
        match block.kind {
            BlockKind::OneHot { .. } => {
                argmax(&theta[block.columns()]) as f64 - argmax(&x[block.columns()]) as f64
            }
            _ => theta[block.offset] - x[block.offset],
        }
    }

    /// Whether some feature moved against its polarity.
    pub fn violates(&self, x: &[f64], theta: &[f64]) -> bool {
        self.signed
            .iter()
            .any(|(b, s)| s * Self::feature_change(b, x, theta) < -POLARITY_TOL)
    }

    /// Distance from `x` to `theta`, negated when any feature moves against
    /// its polarity.
    pub fn gain(&self, x: &[f64], theta: &[f64]) -> f64 {
        let magnitude = self.norm.distance(theta, x);
        if self.violates(x, theta) {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Negated distance of the user's own change (the non-causal substitution).
    pub fn cost(&self, x: &[f64], substituted: &[f64]) -> f64 {
        -self.norm.distance(substituted, x)
    }
}

/// `exp(1 / (d2 + gamma_p))` for squared nearest-neighbour distance `d2`.
pub fn plausibility(nearest_sq: f64, gamma_p: f64) -> f64 {
    (1.0 / (nearest_sq + gamma_p)).exp()
}

/// Nearest-neighbour search over training rows.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    rows: Vec<Vec<f64>>,
}

impl NeighborIndex {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(NeighborIndex { rows })
    }

    /// All training rows, or only the positively labelled ones.
    pub fn from_dataset(data: &Dataset, positive_only: bool) -> Result<Self> {
        NeighborIndex::new(
            data.individuals
                .iter()
                .zip(&data.labels)
                .filter(|(_, &y)| !positive_only || y == 1)
                .map(|(i, _)| i.x.clone())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Squared L2 distance to the closest row.
    pub fn nearest_sq(&self, theta: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for r in &self.rows {
            let mut d = 0.0;
            for (a, b) in r.iter().zip(theta) {
                d += (a - b) * (a - b);
                if d >= best {
                    break;
                }
            }
            best = best.min(d);
        }
        best
    }

    /// Specialises the index to candidates that equal `x` outside `columns`.
    pub fn for_query(&self, x: &[f64], columns: &[usize]) -> QueryIndex {
        let mut in_cols = vec![false; x.len()];
        for &c in columns {
            in_cols[c] = true;
        }
        let mut entries: Vec<(f64, Vec<f64>)> = self
            .rows
            .iter()
            .map(|r| {
                let base = r
                    .iter()
                    .zip(x)
                    .enumerate()
                    .filter(|(c, _)| !in_cols[*c])
                    .map(|(_, (a, b))| (a - b) * (a - b))
                    .sum();
                (base, columns.iter().map(|&c| r[c]).collect())
            })
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        QueryIndex {
            columns: columns.to_vec(),
            base: entries.iter().map(|e| e.0).collect(),
            values: entries.into_iter().flat_map(|e| e.1).collect(),
        }
    }
}

/// Nearest-neighbour search for candidates that differ from a fixed
/// individual only on a few columns. Rows are sorted by their fixed-part
/// distance so the scan can stop early.
#[derive(Debug, Clone)]
pub struct QueryIndex {
    columns: Vec<usize>,
    base: Vec<f64>,
    values: Vec<f64>,
}

impl QueryIndex {
    pub fn nearest_sq(&self, theta: &[f64]) -> f64 {
        let k = self.columns.len();
        let mut best = f64::INFINITY;
        for (r, &base) in self.base.iter().enumerate() {
            if base >= best {
                break;
            }
            let mut d = base;
            for (j, &c) in self.columns.iter().enumerate() {
                let diff = theta[c] - self.values[r * k + j];
                d += diff * diff;
            }
            best = best.min(d);
        }
        best
    }
}

/// `n` offsets drawn uniformly from the `eps`-ball of `norm` in `dim` dimensions.
pub fn ball_offsets(dim: usize, eps: f64, n: usize, norm: Norm, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            if dim == 0 {
                return Vec::new();
            }
            match norm {
                Norm::L2 => {
                    let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                    let len = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    let radius = eps * rng.random::<f64>().powf(1.0 / dim as f64);
                    dir.iter().map(|v| v / len * radius).collect()
                }
                Norm::L1 => {
                    let e: Vec<f64> = (0..=dim).map(|_| Exp1.sample(rng)).collect();
                    let total: f64 = e.iter().sum();
                    e[..dim]
                        .iter()
                        .map(|v| {
                            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            sign * eps * v / total
                        })
                        .collect()
                }
            }
        })
        .collect()
}

/// Shifts `center` by each offset on `columns`, clamping to `bounds`.
pub fn place_offsets(center: &[f64], columns: &[usize], bounds: &[(f64, f64)], offsets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    offsets
        .iter()
        .map(|o| {
            let mut p = center.to_vec();
            for ((&c, &(lo, hi)), d) in columns.iter().zip(bounds).zip(o) {
                p[c] = (center[c] + d).clamp(lo, hi);
            }
            p
        })
        .collect()
}

/// Uniform samples from the `eps`-ball around `center` over `columns`.
pub fn sample_neighborhood(
    center: &[f64],
    columns: &[usize],
    bounds: &[(f64, f64)],
    eps: f64,
    n: usize,
    norm: Norm,
    rng: &mut Rng,
) -> Vec<Vec<f64>> {
    place_offsets(center, columns, bounds, &ball_offsets(columns.len(), eps, n, norm, rng))
}

/// Fraction of `samples` whose label equals `target`.
pub fn robustness_probabilistic(model: &Predictor, target: u8, samples: &[Vec<f64>]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples.iter().filter(|s| model.label(s) == target).count();
    hits as f64 / samples.len() as f64
}

/// 1 when the semifactual scores strictly above `threshold`.
pub fn robustness_absolute(model: &Predictor, theta: &[f64], threshold: f64) -> f64 {
    if model.score(theta) > threshold {
        1.0
    } else {
        0.0
    }
}

/// Mean pairwise L2 distance; zero for fewer than two points.
pub fn diversity(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    if m < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            total += Norm::L2.distance(&points[i], &points[j]);
        }
    }
    2.0 * total / (m * (m - 1)) as f64
}

/// Per-member terms of the genetic fitness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberTerms {
    pub plausibility: f64,
    pub gain: f64,
    pub robustness_mc: f64,
    pub robustness_abs: f64,
}

/// Mean of `P*G + lambda_p*Hp + lambda_s*Ha` over the set, plus the weighted
/// diversity, all scaled by the mean probabilistic robustness.
pub fn fitness(members: &[MemberTerms], diversity: f64, cfg: &ObjectiveConfig) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let m = members.len() as f64;
    let body: f64 = members
        .iter()
        .map(|t| t.plausibility * t.gain + cfg.lambda_p * t.robustness_mc + cfg.lambda_s * t.robustness_abs)
        .sum::<f64>()
        / m;
    let mean_hp = members.iter().map(|t| t.robustness_mc).sum::<f64>() / m;
    (body + cfg.gamma * diversity) * mean_hp
}

/// Binary cross-entropy of score `s` against `target`, with clamping.
pub fn bce(s: f64, target: u8) -> f64 {
    let s = s.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    if target == 1 {
        -s.ln()
    } else {
        -(1.0 - s).ln()
    }
}

/// Per-member terms of the Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeTerms {
    pub lambda: f64,
    pub score: f64,
    pub batch_scores: Vec<f64>,
    /// Plausibility times gain.
    pub payoff: f64,
}

/// `mean_i[-l_i BCE(sf_i) - l_i mean_b BCE(b) + P*G] + gamma * diversity`.
pub fn objective_j(members: &[LagrangeTerms], target: u8, diversity: f64, gamma: f64) -> f64 {
    if members.is_empty() {
        return gamma * diversity;
    }
    let body: f64 = members
        .iter()
        .map(|t| {
            let batch = if t.batch_scores.is_empty() {
                0.0
            } else {
                t.batch_scores.iter().map(|&s| bce(s, target)).sum::<f64>() / t.batch_scores.len() as f64
            };
            -t.lambda * bce(t.score, target) - t.lambda * batch + t.payoff
        })
        .sum();
    body / members.len() as f64 + gamma * diversity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_for;

    #[test]
    fn plausibility_values() {
        assert!((plausibility(0.0, 0.1) - 22026.465794806718).abs() < 1e-6);
        assert!((plausibility(9.9, 0.1) - 1.1051709180756477).abs() < 1e-12);
        assert!(plausibility(0.5, 0.1) > plausibility(0.6, 0.1));
    }

    #[test]
    fn diversity_values() {
        assert_eq!(diversity(&[vec![1.0, 2.0]]), 0.0);
        assert_eq!(diversity(&[vec![1.0], vec![1.0]]), 0.0);
        let d = diversity(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert!((d - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fitness_values() {
        let t = MemberTerms {
            plausibility: 1.0,
            gain: 2.0,
            robustness_mc: 1.0,
            robustness_abs: 1.0,
        };
        assert_eq!(fitness(&[t], 0.0, &ObjectiveConfig::default()), 42.0);
        let zero = MemberTerms { robustness_mc: 0.0, ..t };
        assert_eq!(fitness(&[zero], 5.0, &ObjectiveConfig::default()), 0.0);
        let broken = MemberTerms { robustness_abs: 0.0, ..t };
        assert!(fitness(&[broken], 0.0, &ObjectiveConfig::default()) < 42.0);
    }

    #[test]
    fn lagrangian_values() {
        let t = LagrangeTerms {
            lambda: 1.0,
            score: 0.8,
            batch_scores: vec![],
            payoff: 0.3,
        };
        let j = objective_j(std::slice::from_ref(&t), 1, 0.0, 0.0);
        assert!((j - (0.8f64.ln() + 0.3)).abs() < 1e-15);
        assert!((j - 0.07686).abs() < 1e-5);
        let sure = LagrangeTerms {
            score: 1.0,
            batch_scores: vec![1.0, 1.0],
            ..t.clone()
        };
        assert!((objective_j(&[sure], 1, 2.0, 0.5) - (0.3 + 1.0)).abs() < 1e-9);
        let free = LagrangeTerms { lambda: 0.0, ..t };
        assert_eq!(objective_j(&[free], 1, 0.0, 0.0), 0.3);
        assert!(bce(0.0, 1).is_finite());
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = rng_for(3, 0);
        for norm in [Norm::L1, Norm::L2] {
            let center = [0.5, 0.5, 0.5];
            let bounds = [(0.0, 1.0); 2];
            let pts = sample_neighborhood(&center, &[0, 2], &bounds, 0.1, 100, norm, &mut rng);
            assert_eq!(pts.len(), 100);
            for p in &pts {
                assert!(norm.distance(p, &center) <= 0.1 + 1e-12);
                assert_eq!(p[1], 0.5);
            }
        }
        let tiny = sample_neighborhood(&[0.3], &[0], &[(0.0, 1.0)], 1e-12, 10, Norm::L2, &mut rng);
        assert!(tiny.iter().all(|p| (p[0] - 0.3).abs() <= 1e-12));
        let a = sample_neighborhood(&[0.3], &[0], &[(0.0, 1.0)], 0.1, 10, Norm::L2, &mut rng_for(9, 1));
        let b = sample_neighborhood(&[0.3], &[0], &[(0.0, 1.0)], 0.1, 10, Norm::L2, &mut rng_for(9, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn query_index_matches_full_scan() {
        let mut rng = rng_for(5, 0);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..6).map(|_| rng.random()).collect()).collect();
        let index = NeighborIndex::new(rows).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.random()).collect();
        let q = index.for_query(&x, &[1, 4]);
        for _ in 0..50 {
            let mut theta = x.clone();
            theta[1] = rng.random();
            theta[4] = rng.random();
            assert!((q.nearest_sq(&theta) - index.nearest_sq(&theta)).abs() < 1e-12);
        }
        assert!(matches!(NeighborIndex::new(vec![]), Err(Error::EmptyDataset)));
    }
}
