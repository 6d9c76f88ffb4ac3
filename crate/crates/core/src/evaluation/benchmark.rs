use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{aggregate_normalized, Aggregate, Row};
use super::{evaluate_explanations, identity_metrics, EvalConfig};
use crate::data::{load_dataset, Dataset, Encoding, FeatureSchema};
use crate::method::{explain, Context, Method};
use crate::objective::NeighborIndex;
use crate::predictors::{train, ModelSpec, Predictor};
use crate::scm::Scm;
use crate::sgen::EngineConfig;
use crate::{rng_for, synth, Error, Result};

/// Where a benchmark dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic {
        generator: String,
        rows: usize,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        schema: PathBuf,
        #[serde(default = "default_encoding")]
        encoding: Encoding,
        /// Causal model in raw units, for causal methods.
        #[serde(default)]
        scm: Option<PathBuf>,
    },
}

fn default_encoding() -> Encoding {
    Encoding::OneHot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DataSource,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<(Dataset, Option<Scm>)> {
        match &self.source {
            DataSource::Synthetic { generator, rows, seed } => synth::generate(generator, *rows, *seed),
            DataSource::Csv {
                path,
                schema,
                encoding,
                scm,
            } => {
                let schema = FeatureSchema::load(schema)?;
                let data = load_dataset(path, &schema, *encoding)?;
                let scm = match scm {
                    Some(p) => Some(Scm::for_encoder(&crate::scm::ScmConfig::load(p)?, &data.encoder, true)?),
                    None => None,
                };
                Ok((data, scm))
            }
        }
    }
}

/// A benchmark grid. Every (dataset, model, method, m, seed) cell explains
/// `individuals_per_seed` positively classified rows drawn with the seed,
/// and reports their averaged metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub datasets: Vec<DatasetSpec>,
    pub models: Vec<ModelSpec>,
    pub methods: Vec<Method>,
    pub m: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub individuals_per_seed: usize,
    /// Seed of model training.
    #[serde(default)]
    pub train_seed: u64,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub evaluation: EvalConfig,
}

fn one() -> usize {
    1
}

impl Plan {
    pub fn from_json(text: &str) -> Result<Plan> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Plan> {
        Plan::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A cell that could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub dataset: String,
    pub model: String,
    pub method: String,
    pub m: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<Row>,
    pub aggregate: Aggregate,
    pub failures: Vec<Failure>,
    /// Cells where a method reported no effective semifactual, scored as
    /// leaving the individual unchanged.
    pub empty_results: usize,
}

impl BenchmarkReport {
    /// Long-format CSV of the raw rows.
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Summary JSON: aggregates, warnings and failures.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            cells: &'a [super::report::Cell],
            warnings: &'a [String],
            failures: &'a [Failure],
            empty_results: usize,
            rows: usize,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            cells: &self.aggregate.cells,
            warnings: &self.aggregate.warnings,
            failures: &self.failures,
            empty_results: self.empty_results,
            rows: self.rows.len(),
        })?)
    }

    /// Writes `results.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.csv_bytes()?)?;
        std::fs::write(dir.join("summary.json"), self.summary_json()?)?;
        Ok(())
    }
}

struct Trained {
    dataset: usize,
    model_name: String,
    predictor: Predictor,
    candidates: Vec<usize>,
}

enum Outcome {
    Row(Row, bool),
    Failed(Failure),
}

/// Runs every cell of `plan`; cells run in parallel and the report is in
/// plan order, so reruns are byte-identical.
pub fn run_benchmark(plan: &Plan) -> Result<BenchmarkReport> {
    plan.engine.validate()?;
    if plan.m.contains(&0) {
        return Err(Error::Config("every m must be at least 1".into()));
    }
    let loaded: Vec<(Dataset, Option<Scm>, NeighborIndex)> = plan
        .datasets
        .iter()
        .map(|d| {
            let (data, scm) = d.load()?;
            let neighbors = NeighborIndex::from_dataset(&data, plan.engine.objective.plausibility_positive_only)?;
            Ok((data, scm, neighbors))
        })
        .collect::<Result<_>>()?;

    let mut trained = Vec::new();
    let mut failures = Vec::new();
    for (di, (data, _, _)) in loaded.iter().enumerate() {
        for spec in &plan.models {
            match train(data, spec, plan.train_seed) {
                Ok(predictor) => {
                    let candidates = (0..data.len()).filter(|&i| predictor.is_positive(&data.individuals[i].x)).collect();
                    trained.push(Trained {
                        dataset: di,
                        model_name: spec.name().to_string(),
                        predictor,
                        candidates,
                    });
                }
                Err(e) => failures.push(Failure {
                    dataset: plan.datasets[di].name.clone(),
                    model: spec.name().to_string(),
                    method: String::new(),
                    m: 0,
                    seed: 0,
                    error: e.to_string(),
                }),
            }
        }
    }

    let mut cells = Vec::new();
    for t in &trained {
        for &method in &plan.methods {
            for &m in &plan.m {
                for &seed in &plan.seeds {
                    cells.push((t, method, m, seed));
                }
            }
        }
    }
    let outcomes: Vec<Outcome> = cells
        .par_iter()
        .map(|&(t, method, m, seed)| run_cell(plan, &loaded[t.dataset], t, method, m, seed))
        .collect();

    let mut report = BenchmarkReport {
        failures,
        ..Default::default()
    };
    for o in outcomes {
        match o {
            Outcome::Row(r, empty) => {
                report.empty_results += usize::from(empty);
                report.rows.push(r);
            }
            Outcome::Failed(f) => report.failures.push(f),
        }
    }
    report.aggregate = aggregate_normalized(&report.rows);
    Ok(report)
}

fn run_cell(
    plan: &Plan,
    (data, scm, neighbors): &(Dataset, Option<Scm>, NeighborIndex),
    t: &Trained,
    method: Method,
    m: usize,
    seed: u64,
) -> Outcome {
    let name = &plan.datasets[t.dataset].name;
    let fail = |e: Error| {
        Outcome::Failed(Failure {
            dataset: name.clone(),
            model: t.model_name.clone(),
            method: method.name().to_string(),
            m,
            seed,
            error: e.to_string(),
        })
    };
    if t.candidates.is_empty() {
        return fail(Error::Config("the model classifies no row positively".into()));
    }
    let picks: Vec<usize> = t
        .candidates
        .choose_multiple(&mut rng_for(seed, 0xbe0c), plan.individuals_per_seed)
        .copied()
        .collect();
    let ctx = Context {
        model: &t.predictor,
        encoder: &data.encoder,
        data: Some(data),
        neighbors: Some(neighbors),
        scm: scm.as_ref(),
    };
    let mut sum = [0.0; 4];
    let mut empty = false;
    for &i in &picks {
        let x = &data.individuals[i].x;
        let metrics = match explain(method, x, ctx, m, &plan.engine, seed) {
            Ok(set) => match evaluate_explanations(&set, x, &t.predictor, &data.encoder, neighbors, &plan.evaluation, seed) {
                Ok(metrics) => metrics,
                Err(e) => return fail(e),
            },
            Err(Error::EmptyResult(_)) => {
                empty = true;
                identity_metrics(x, &t.predictor, &data.encoder, neighbors, &plan.evaluation, seed)
            }
            Err(e) => return fail(e),
        };
        for (s, v) in sum.iter_mut().zip([metrics.gain, metrics.plausibility, metrics.robustness, metrics.diversity]) {
            *s += v;
        }
    }
    let k = picks.len() as f64;
    let metrics = super::Metrics {
        gain: sum[0] / k,
        plausibility: sum[1] / k,
        robustness: sum[2] / k,
        diversity: sum[3] / k,
    };
    Outcome::Row(Row::new(name, &t.model_name, method.name(), m, seed, metrics), empty)
}
