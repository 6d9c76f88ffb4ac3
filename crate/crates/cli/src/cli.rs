//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use semifactual::data::{load_dataset, Encoding, FeatureSchema, Overrides, Record};
use semifactual::evaluation::{run_benchmark, DataSource, DatasetSpec, Plan};
use semifactual::method::Method;
use semifactual::predictors::{train, train_with_holdout, ModelSpec, Predictor};
use semifactual::sgen::EngineConfig;
use semifactual::synth;

use crate::error::AppError;
use crate::server::{router, AppState, ServerConfig};
use crate::session::{ExplainRequest, IndividualRef, Session};

#[derive(Debug, Parser)]
#[command(name = "sgen", version, about = "Semifactual explanations for positively classified individuals")]
pub struct Cli {
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON settings file: engine settings for `explain` and `benchmark`,
    /// a model spec for `train`, the server configuration for `serve`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and save it as JSON.
    Train(TrainArgs),
    /// Explain one positively classified individual.
    Explain(ExplainArgs),
    /// Run a benchmark plan and write results.csv and summary.json.
    Benchmark(BenchmarkArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Check a feature schema, optionally against a CSV file.
    ValidateSchema(ValidateArgs),
    /// Write a synthetic dataset with its schema (and causal model).
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with the features and the label column.
    #[arg(long, requires = "schema", conflicts_with = "generator")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, value_parser = parse_encoding, default_value = "one_hot")]
    pub encoding: Encoding,
    /// Causal model in raw units (JSON).
    #[arg(long)]
    pub scm: Option<PathBuf>,
    /// Synthetic generator instead of a CSV file.
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    /// Seed of the synthetic generator.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

impl DataArgs {
    pub fn spec(&self) -> Result<DatasetSpec, AppError> {
        match (&self.data, &self.generator) {
            (Some(path), _) => Ok(DatasetSpec {
                name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                source: DataSource::Csv {
                    path: path.clone(),
                    schema: self.schema.clone().expect("clap requires --schema"),
                    encoding: self.encoding,
                    scm: self.scm.clone(),
                },
            }),
            (None, Some(generator)) => Ok(DatasetSpec {
                name: generator.clone(),
                source: DataSource::Synthetic {
                    generator: generator.clone(),
                    rows: self.rows,
                    seed: self.data_seed,
                },
            }),
            (None, None) => Err(AppError::bad_request("data", "give --data and --schema, or --generator")),
        }
    }
}

fn parse_encoding(s: &str) -> Result<Encoding, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown encoding `{s}` (one_hot or ordinal)"))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "logistic")]
    pub model_kind: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Share of rows held out to report accuracy.
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Saved model; otherwise one is trained with `--model-kind`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "logistic")]
    pub model_kind: String,
    /// Row id of the individual.
    #[arg(long, conflicts_with = "record", required_unless_present = "record")]
    pub row: Option<String>,
    /// JSON file holding the individual's record.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, default_value = "sgen")]
    pub method: Method,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// JSON file of per-feature constraint overrides.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    /// Print only the JSON.
    #[arg(long)]
    pub json_only: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub schema: PathBuf,
    /// CSV file checked against the schema.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = parse_encoding, default_value = "one_hot")]
    pub encoding: Encoding,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub generator: String,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_json<T: DeserializeOwned>(path: &Path, field: &str) -> Result<T, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::bad_request(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::bad_request(field, format!("{}: {e}", path.display())))
}

fn pretty(value: &impl serde::Serialize) -> Result<String, AppError> {
    serde_json::to_string_pretty(value).map_err(|e| AppError::internal(e.to_string()))
}

/// Runs one command and returns what it prints on stdout.
pub fn run(cli: Cli) -> Result<String, AppError> {
    let seed = cli.seed.unwrap_or(0);
    let config = cli.config.as_deref();
    match cli.command {
        Command::Train(args) => train_cmd(args, seed, config),
        Command::Explain(args) => explain_cmd(args, seed, config),
        Command::Benchmark(args) => benchmark_cmd(args, cli.seed, config),
        Command::Serve(args) => serve_cmd(args, cli.seed, config),
        Command::ValidateSchema(args) => validate_cmd(args),
        Command::Synth(args) => synth_cmd(args, seed),
    }
}

fn model_spec(kind: &str, config: Option<&Path>) -> Result<ModelSpec, AppError> {
    match config {
        Some(path) => read_json(path, "config"),
        None => ModelSpec::parse_kind(kind).map_err(|e| AppError::bad_request("model_kind", e.to_string())),
    }
}

fn train_cmd(args: TrainArgs, seed: u64, config: Option<&Path>) -> Result<String, AppError> {
    let spec = model_spec(&args.model_kind, config)?;
    let (data, _) = args.data.spec()?.load()?;
    let (predictor, train_accuracy, holdout_accuracy) = if args.holdout > 0.0 {
        let t = train_with_holdout(&data, &spec, args.holdout, seed)?;
        (t.predictor, t.train_accuracy, Some(t.holdout_accuracy))
    } else {
        let p = train(&data, &spec, seed)?;
        let acc = semifactual::predictors::accuracy(&p, &data);
        (p, acc, None)
    };
    predictor.save(&args.out)?;
    pretty(&json!({
        "model": spec.name(),
        "out": args.out,
        "train_accuracy": train_accuracy,
        "holdout_accuracy": holdout_accuracy,
        "schema_hash": data.schema().hash(),
    }))
}

fn explain_cmd(args: ExplainArgs, seed: u64, config: Option<&Path>) -> Result<String, AppError> {
    let engine: EngineConfig = match config {
        Some(path) => read_json(path, "config")?,
        None => EngineConfig::default(),
    };
    engine.validate()?;
    let spec = args.data.spec()?;
    let (data, scm) = spec.load()?;
    let model = match &args.model {
        Some(path) => Predictor::load_for(path, &data.schema().hash())?,
        None => train(&data, &ModelSpec::parse_kind(&args.model_kind)?, 0)?,
    };
    let session = Session::new(spec.name, data, scm, model, engine.objective.plausibility_positive_only)?;
    let individual = match (&args.row, &args.record) {
        (Some(id), _) => IndividualRef::Id { id: id.clone() },
        (None, Some(path)) => IndividualRef::Record {
            record: read_json::<Record>(path, "record")?,
        },
        (None, None) => return Err(AppError::bad_request("individual", "give --row or --record")),
    };
    let overrides: Overrides = match &args.overrides {
        Some(path) => read_json(path, "overrides")?,
        None => Overrides::default(),
    };
    let req = ExplainRequest {
        dataset: session.id.clone(),
        individual,
        method: args.method,
        m: args.m,
        overrides,
        seed,
        config: None,
    };
    let out = session.explain(&req, &engine)?;
    let mut text = pretty(&out)?;
    if !args.json_only {
        for s in &out.sentences {
            text.push('\n');
            text.push_str(s);
        }
    }
    Ok(text)
}

fn benchmark_cmd(args: BenchmarkArgs, seed: Option<u64>, config: Option<&Path>) -> Result<String, AppError> {
    let mut plan = Plan::load(&args.plan)?;
    if let Some(seed) = seed {
        plan.train_seed = seed;
    }
    if let Some(path) = config {
        plan.engine = read_json(path, "config")?;
    }
    let report = run_benchmark(&plan)?;
    report.write(&args.out)?;
    let mut text = format!("{:<16} {:>3} {:>14} {:>14}\n", "method", "m", "gain", "robustness");
    for c in &report.aggregate.cells {
        text.push_str(&format!(
            "{:<16} {:>3} {:>7.3} ±{:.3} {:>7.3} ±{:.3}\n",
            c.method, c.m, c.gain.mean, c.gain.se, c.robustness.mean, c.robustness.se
        ));
    }
    for w in &report.aggregate.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    for f in &report.failures {
        text.push_str(&format!("failed: {} {} {} m={} seed={}: {}\n", f.dataset, f.model, f.method, f.m, f.seed, f.error));
    }
    text.push_str(&format!("wrote {} rows to {}", report.rows.len(), args.out.display()));
    Ok(text)
}

fn serve_cmd(args: ServeArgs, seed: Option<u64>, config: Option<&Path>) -> Result<String, AppError> {
    let mut cfg: ServerConfig = match config {
        Some(path) => read_json(path, "config")?,
        None => ServerConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.train_seed = seed;
    }
    let state = AppState::load(&cfg)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::internal(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .map_err(|e| AppError::bad_request("addr", format!("{}: {e}", args.addr)))?;
        eprintln!("listening on http://{}", args.addr);
        axum::serve(listener, router(state))
            .await
            .map_err(|e| AppError::internal(e.to_string()))
    })?;
    Ok(String::new())
}

fn validate_cmd(args: ValidateArgs) -> Result<String, AppError> {
    let schema = FeatureSchema::load(&args.schema)?;
    let rows = match &args.data {
        Some(path) => Some(load_dataset(path, &schema, args.encoding)?.len()),
        None => None,
    };
    let actionable: Vec<&str> = schema.actionable().map(|(_, f)| f.name.as_str()).collect();
    pretty(&json!({
        "valid": true,
        "features": schema.features.len(),
        "actionable": actionable,
        "hash": schema.hash(),
        "rows": rows,
    }))
}

fn synth_cmd(args: SynthArgs, seed: u64) -> Result<String, AppError> {
    let (data, _) = synth::generate(&args.generator, args.rows, seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| AppError::bad_request("out", e.to_string()))?;
    data.write_csv(args.out.join("data.csv"))?;
    std::fs::write(args.out.join("schema.json"), pretty(data.schema())?)
        .map_err(|e| AppError::bad_request("out", e.to_string()))?;
    let scm = match args.generator.as_str() {
        "adult" => Some(synth::adult_scm_config()),
        "compas" => Some(synth::compas_scm_config()),
        _ => None,
    };
    let mut files = vec!["data.csv", "schema.json"];
    if let Some(scm) = scm {
        std::fs::write(args.out.join("scm.json"), pretty(&scm)?)
            .map_err(|e| AppError::bad_request("out", e.to_string()))?;
        files.push("scm.json");
    }
    pretty(&json!({ "out": args.out, "rows": data.len(), "files": files }))
}
