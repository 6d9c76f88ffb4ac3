use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::Metrics;
use crate::{Error, Result};

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub dataset: String,
    pub model: String,
    pub method: String,
    pub m: usize,
    pub seed: u64,
    pub gain: f64,
    pub plausibility: f64,
    pub robustness: f64,
    pub diversity: f64,
}

impl Row {
    pub fn new(dataset: &str, model: &str, method: &str, m: usize, seed: u64, metrics: Metrics) -> Row {
        Row {
            dataset: dataset.to_string(),
            model: model.to_string(),
            method: method.to_string(),
            m,
            seed,
            gain: metrics.gain,
            plausibility: metrics.plausibility,
            robustness: metrics.robustness,
            diversity: metrics.diversity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over the square root of the count.
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> MeanSe {
        let n = values.len();
        if n == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        MeanSe { mean, se, n }
    }

    /// True when the `mean ± se` intervals are disjoint and this one is higher.
    pub fn clearly_above(&self, other: &MeanSe) -> bool {
        self.mean - self.se > other.mean + other.se
    }
}

/// Aggregate of one method at one `m`, over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: String,
    pub m: usize,
    pub gain: MeanSe,
    pub plausibility: MeanSe,
    pub robustness: MeanSe,
    pub diversity: MeanSe,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Rows with gain, plausibility and diversity min-max normalised per dataset.
    pub normalized: Vec<Row>,
    /// Per method and `m`: the normalised metrics averaged over datasets and
    /// models for each seed, then summarised over seeds.
    pub cells: Vec<Cell>,
    pub warnings: Vec<String>,
}

impl Aggregate {
    pub fn cell(&self, method: &str, m: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.m == m)
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Normalises each dataset's rows across methods, leaves robustness raw, and
/// summarises every (method, m) cell as mean ± standard error over seeds.
pub fn aggregate_normalized(rows: &[Row]) -> Aggregate {
    let mut out = Aggregate {
        normalized: rows.to_vec(),
        ..Default::default()
    };
    let datasets: Vec<String> = {
        let mut d: Vec<String> = rows.iter().map(|r| r.dataset.clone()).collect();
        d.sort();
        d.dedup();
        d
    };
    type Get = fn(&Row) -> f64;
    type Set = fn(&mut Row, f64);
    let metrics: [(&str, Get, Set); 3] = [
        ("gain", |r| r.gain, |r, v| r.gain = v),
        ("plausibility", |r| r.plausibility, |r, v| r.plausibility = v),
        ("diversity", |r| r.diversity, |r, v| r.diversity = v),
    ];
    for d in &datasets {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| &rows[i].dataset == d).collect();
        let methods = {
            let mut ms: Vec<&str> = idx.iter().map(|&i| rows[i].method.as_str()).collect();
            ms.sort();
            ms.dedup();
            ms.len()
        };
        if methods < 2 {
            out.warnings
                .push(format!("dataset `{d}` has a single method; its metrics are reported unnormalised"));
            continue;
        }
        for (name, get, set) in metrics {
            let (lo, hi) = min_max(idx.iter().map(|&i| get(&rows[i])).filter(|v| v.is_finite()));
            let span = hi - lo;
            if !(span > 0.0) {
                out.warnings
                    .push(format!("dataset `{d}`: {name} is identical across methods; normalised to 0"));
            }
            for &i in &idx {
                let v = get(&rows[i]);
                set(&mut out.normalized[i], if span > 0.0 { (v - lo) / span } else { 0.0 });
            }
        }
    }

    // Average over datasets and models per (method, m, seed) first.
    let mut per_seed: BTreeMap<(String, usize), BTreeMap<u64, Vec<&Row>>> = BTreeMap::new();
    for r in &out.normalized {
        per_seed
            .entry((r.method.clone(), r.m))
            .or_default()
            .entry(r.seed)
            .or_default()
            .push(r);
    }
    let mean = |rs: &[&Row], f: fn(&Row) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64;
    for ((method, m), seeds) in per_seed {
        let collect = |f: fn(&Row) -> f64| -> Vec<f64> { seeds.values().map(|rs| mean(rs, f)).collect() };
        out.cells.push(Cell {
            method,
            m,
            gain: MeanSe::of(&collect(|r| r.gain)),
            plausibility: MeanSe::of(&collect(|r| r.plausibility)),
            robustness: MeanSe::of(&collect(|r| r.robustness)),
            diversity: MeanSe::of(&collect(|r| r.diversity)),
        });
    }
    out
}

/// Two-sided paired t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Config("a paired t-test needs two equal-length samples of at least 2".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = MeanSe::of(&d);
    let df = (d.len() - 1) as f64;
    if s.se == 0.0 {
        let (t, p) = if s.mean == 0.0 { (0.0, 1.0) } else { (s.mean.signum() * f64::INFINITY, 0.0) };
        return Ok(TTest { t, df, p });
    }
    let t = s.mean / s.se;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Config(e.to_string()))?;
    Ok(TTest {
        t,
        df,
        p: 2.0 * (1.0 - dist.cdf(t.abs())),
    })
}

/// Cohen's d with the pooled standard deviation of two samples.
pub fn cohens_d(a: &[f64], b: &[f64]) -> f64 {
    let var = |v: &[f64], mean: f64| v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    let (ma, mb) = (crate::linalg::mean(a), crate::linalg::mean(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * var(a, ma) + (nb - 1.0) * var(b, mb)) / (na + nb - 2.0)).sqrt();
    (ma - mb) / pooled
}
