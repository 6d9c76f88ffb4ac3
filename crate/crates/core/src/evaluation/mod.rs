//! Comparison metrics, the adversarial-radius probe, normalised aggregation
//! and the benchmark runner.

mod adversarial;
mod benchmark;
mod metrics;
mod report;

pub use adversarial::{adversarial_radius, Adversarial, AdversarialConfig};
pub use benchmark::{run_benchmark, BenchmarkReport, DataSource, DatasetSpec, Failure, Plan};
pub use metrics::{evaluate_explanations, identity_metrics, single_feature_robustness, EvalConfig, Metrics};
pub use report::{aggregate_normalized, cohens_d, paired_t_test, Aggregate, Cell, MeanSe, Row, TTest};
