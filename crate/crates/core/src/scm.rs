//! Linear additive-noise structural causal models.
//!
//! Every node follows `x_i = intercept_i + sum_j w_ij * x_j + u_i`. Abduction
//! is exact (`u_i` is the residual of its own equation), hard interventions
//! sever a node's equation, and the push-forward is affine in both the
//! intervened values and the observed individual, so all derivatives are
//! exact.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Encoder;
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub intercept: f64,
    /// Standard deviation of the exogenous noise, used only for sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
}

impl NodeConfig {
    pub fn root(name: impl Into<String>) -> Self {
        NodeConfig {
            name: name.into(),
            parents: Vec::new(),
            weights: Vec::new(),
            intercept: 0.0,
            noise_std: None,
        }
    }

    pub fn child<S: Into<String>>(name: impl Into<String>, edges: impl IntoIterator<Item = (S, f64)>) -> Self {
        let (parents, weights) = edges.into_iter().map(|(p, w)| (p.into(), w)).unzip();
        NodeConfig {
            parents,
            weights,
            ..NodeConfig::root(name)
        }
    }

    pub fn with_intercept(mut self, intercept: f64) -> Self {
        self.intercept = intercept;
        self
    }

    pub fn with_noise(mut self, std: f64) -> Self {
        self.noise_std = Some(std);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScmConfig {
    pub nodes: Vec<NodeConfig>,
}

impl ScmConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ScmConfig::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    names: Vec<String>,
    /// `(parent index, weight)` per node.
    parents: Vec<Vec<(usize, f64)>>,
    intercept: Vec<f64>,
    noise_std: Vec<f64>,
    order: Vec<usize>,
}

impl Scm {
    pub fn new(config: &ScmConfig) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, n) in config.nodes.iter().enumerate() {
            if index.insert(n.name.as_str(), i).is_some() {
                return Err(Error::Config(format!("duplicate node `{}`", n.name)));
            }
        }
        let mut parents = Vec::with_capacity(config.nodes.len());
        for n in &config.nodes {
            if n.parents.len() != n.weights.len() {
                return Err(Error::Config(format!(
                    "node `{}` has {} parents but {} weights",
                    n.name,
                    n.parents.len(),
                    n.weights.len()
                )));
            }
            let mut edges = Vec::with_capacity(n.parents.len());
            for (p, &w) in n.parents.iter().zip(&n.weights) {
                let j = *index.get(p.as_str()).ok_or_else(|| Error::UnknownNode(p.clone()))?;
                edges.push((j, w));
            }
            parents.push(edges);
        }
        let names: Vec<String> = config.nodes.iter().map(|n| n.name.clone()).collect();
        let order = topological_order(&names, &parents)?;
        Ok(Scm {
            intercept: config.nodes.iter().map(|n| n.intercept).collect(),
            noise_std: config.nodes.iter().map(|n| n.noise_std.unwrap_or(1.0)).collect(),
            names,
            parents,
            order,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Scm::new(&ScmConfig::load(path)?)
    }

    /// An SCM without edges over `names`.
    pub fn independent<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let config = ScmConfig {
            nodes: names.into_iter().map(NodeConfig::root).collect(),
        };
        Scm::new(&config).expect("edgeless graphs are acyclic")
    }

    pub fn config(&self) -> ScmConfig {
        ScmConfig {
            nodes: (0..self.len())
                .map(|i| NodeConfig {
                    name: self.names[i].clone(),
                    parents: self.parents[i].iter().map(|(p, _)| self.names[*p].clone()).collect(),
                    weights: self.parents[i].iter().map(|(_, w)| *w).collect(),
                    intercept: self.intercept[i],
                    noise_std: Some(self.noise_std[i]),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, node: usize) -> &[(usize, f64)] {
        &self.parents[node]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::WidthMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn mechanism(&self, i: usize, x: &[f64]) -> f64 {
        self.intercept[i] + self.parents[i].iter().map(|(p, w)| w * x[*p]).sum::<f64>()
    }

    /// Exogenous noise that explains `x`.
    pub fn abduct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok((0..self.len()).map(|i| x[i] - self.mechanism(i, x)).collect())
    }

    /// Evaluates every equation in topological order from noise `u`.
    pub fn push(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        let mut x = vec![0.0; self.len()];
        for &i in &self.order {
            x[i] = self.mechanism(i, &x) + u[i];
        }
        Ok(x)
    }

    /// Abduction, hard interventions `(node, value)`, then prediction.
    pub fn process(&self, x: &[f64], interventions: &[(usize, f64)]) -> Result<Vec<f64>> {
        let u = self.abduct(x)?;
        let mut fixed = vec![None; self.len()];
        for &(node, v) in interventions {
            *fixed.get_mut(node).ok_or_else(|| Error::UnknownNode(format!("#{node}")))? = Some(v);
        }
        // Nodes whose parents are untouched keep their observed value
        // bit-for-bit, so identity interventions are exact.
        let mut out = x.to_vec();
        for &i in &self.order {
            out[i] = match fixed[i] {
                Some(v) => v,
                None if self.parents[i].iter().all(|&(p, _)| out[p] == x[p]) => x[i],
                None => self.mechanism(i, &out) + u[i],
            };
        }
        Ok(out)
    }

    pub fn process_named(&self, x: &[f64], interventions: &[(&str, f64)]) -> Result<Vec<f64>> {
        let resolved = interventions
            .iter()
            .map(|(n, v)| Ok((self.index_of(n).ok_or_else(|| Error::UnknownNode(n.to_string()))?, *v)))
            .collect::<Result<Vec<_>>>()?;
        self.process(x, &resolved)
    }

    /// `J[i][k] = d out_i / d value_k` for interventions on `nodes`.
    pub fn jacobian(&self, nodes: &[usize]) -> Vec<Vec<f64>> {
        let mut jac = vec![vec![0.0; nodes.len()]; self.len()];
        let mut fixed = vec![None; self.len()];
        for (k, &n) in nodes.iter().enumerate() {
            fixed[n] = Some(k);
        }
        for &i in &self.order {
            if let Some(k) = fixed[i] {
                jac[i][k] = 1.0;
                continue;
            }
            for k in 0..nodes.len() {
                jac[i][k] = self.parents[i].iter().map(|(p, w)| w * jac[*p][k]).sum();
            }
        }
        jac
    }

    /// `M[i][c] = d out_i / d x_c`: how a perturbation of the observed
    /// individual moves the outcome of fixed interventions on `nodes`.
    pub fn perturbation_map(&self, nodes: &[usize]) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut fixed = vec![false; n];
        for &k in nodes {
            fixed[k] = true;
        }
        // out = A out + (x - B x) on free nodes, where A = B is the edge matrix.
        let mut map = vec![vec![0.0; n]; n];
        for &i in &self.order {
            if fixed[i] {
                continue;
            }
            let mut row = vec![0.0; n];
            row[i] += 1.0;
            for &(p, w) in &self.parents[i] {
                row[p] -= w;
                for c in 0..n {
                    row[c] += w * map[p][c];
                }
            }
            map[i] = row;
        }
        map
    }

    pub fn descendants(&self, node: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &i in &self.order {
            if self.parents[i].iter().any(|(p, w)| *w != 0.0 && (*p == node || out.contains(p))) {
                out.insert(i);
            }
        }
        out
    }

    /// Draws `n` samples with Gaussian exogenous noise.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let u: Vec<f64> = self
                    .noise_std
                    .iter()
                    .map(|s| s * Distribution::<f64>::sample(&StandardNormal, rng))
                    .collect::<Vec<f64>>();
                self.push(&u).expect("noise has one entry per node")
            })
            .collect()
    }

    /// Re-expresses an SCM written in raw units in min-max scaled units, where
    /// node `i` has scaled value `(raw - lo_i) / range_i`.
    pub fn rescaled(&self, lo: &[f64], range: &[f64]) -> Scm {
        let mut out = self.clone();
        for i in 0..self.len() {
            let mut b = self.intercept[i] - lo[i];
            for (k, &(p, w)) in self.parents[i].iter().enumerate() {
                b += w * lo[p];
                out.parents[i][k].1 = w * range[p] / range[i];
            }
            out.intercept[i] = b / range[i];
            out.noise_std[i] = self.noise_std[i] / range[i];
        }
        out
    }

    /// Aligns the SCM with an encoder whose columns are one per feature
    /// (ordinal encoding). Features missing from the graph become isolated
    /// roots. With `raw_units`, the equations are rescaled to the encoder's
    /// min-max scaling.
    pub fn for_encoder(config: &ScmConfig, encoder: &Encoder, raw_units: bool) -> Result<Scm> {
        if encoder.blocks().iter().any(|b| !b.is_scalar()) {
            return Err(Error::Unsupported(
                "causal models need one column per feature (ordinal encoding)".into(),
            ));
        }
        let schema = encoder.schema();
        for n in &config.nodes {
            if schema.index_of(&n.name).is_none() {
                return Err(Error::UnknownNode(n.name.clone()));
            }
        }
        let by_name: BTreeMap<&str, &NodeConfig> = config.nodes.iter().map(|n| (n.name.as_str(), n)).collect();
        let aligned = ScmConfig {
            nodes: schema
                .features
                .iter()
                .map(|f| by_name.get(f.name.as_str()).map(|n| (*n).clone()).unwrap_or_else(|| NodeConfig::root(&f.name)))
                .collect(),
        };
        let scm = Scm::new(&aligned)?;
        if !raw_units {
            return Ok(scm);
        }
        let lo: Vec<f64> = encoder.blocks().iter().map(|b| b.unscale(0.0)).collect();
        let range: Vec<f64> = encoder.blocks().iter().map(|b| b.range()).collect();
        Ok(scm.rescaled(&lo, &range))
    }
}

fn topological_order(names: &[String], parents: &[Vec<(usize, f64)>]) -> Result<Vec<usize>> {
    let n = names.len();
    let mut indegree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (i, ps) in parents.iter().enumerate() {
        for &(p, _) in ps {
            children[p].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in children[i].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).expect("some node is on a cycle");
        return Err(Error::Cycle(names[stuck].clone()));
    }
    Ok(order)
}
