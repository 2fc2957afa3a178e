//! Suite loading, metric scoring and agreement with human judgements.

pub mod evaluate;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod suite;

pub use evaluate::{evaluate, EvalConfig, EvaluationReport};
pub use metrics::{build_metric, Metric, MetricError, MetricRegistry, Resources};
pub use suite::{load_suite, validate_suite, Dataset, PhenomenonRegistry, TestCase};
