//! Runs metrics over a suite and aggregates agreement with human scores.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::harness::metrics::{Metric, MetricRegistry};
use crate::harness::stats::{mad_and_avg, pairwise_ranking, rescale, spearman, TauRule};
use crate::harness::suite::{Dataset, PhenomenonRegistry, TestCase};
use crate::score::MetricScore;

/// Label of the pooled row in every dataset.
pub const OVERALL: &str = "Overall";

#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalConfig {
    pub tau_rule: TauRule,
    /// Free-form settings copied into the report header.
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub dataset: Dataset,
    pub group: String,
    pub metric: String,
    pub n: usize,
    pub avg: f64,
    pub mad: f64,
    pub ranking: Option<f64>,
    pub spearman: Option<f64>,
}

/// Mean normalized human score of a group, normalized over the whole
/// dataset (`avg_global`) and within the group only (`avg_local`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HumanRow {
    pub dataset: Dataset,
    pub group: String,
    pub n: usize,
    pub avg_global: f64,
    pub avg_local: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricFailure {
    pub metric: String,
    pub failed_cases: usize,
    pub first_error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauValue {
    pub dataset: Dataset,
    pub metric: String,
    pub tau: f64,
}

/// Per-case scores of one metric, aligned with the suite order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricColumn {
    pub metric: String,
    pub scores: Vec<Option<MetricScore>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub metrics: Vec<String>,
    pub rows: Vec<GroupRow>,
    pub human: Vec<HumanRow>,
    pub taus: Vec<TauValue>,
    pub failures: Vec<MetricFailure>,
    pub tau_rule: TauRule,
    pub metadata: BTreeMap<String, String>,
    #[serde(skip)]
    pub columns: Vec<MetricColumn>,
}

impl EvaluationReport {
    pub fn row(&self, dataset: Dataset, group: &str, metric: &str) -> Option<&GroupRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.group == group && r.metric == metric)
    }

    pub fn human_row(&self, dataset: Dataset, group: &str) -> Option<&HumanRow> {
        self.human
            .iter()
            .find(|r| r.dataset == dataset && r.group == group)
    }

    pub fn failed(&self, metric: &str) -> bool {
        self.failures.iter().any(|f| f.metric == metric)
    }

    /// Groups of a dataset in report order, `Overall` last.
    pub fn groups(&self, dataset: Dataset) -> Vec<&str> {
        self.human
            .iter()
            .filter(|h| h.dataset == dataset)
            .map(|h| h.group.as_str())
            .collect()
    }

    pub fn datasets(&self) -> Vec<Dataset> {
        let mut d: Vec<Dataset> = self.human.iter().map(|h| h.dataset).collect();
        d.dedup();
        d
    }
}

/// Scores every (metric, case) pair in parallel; results keep suite order.
pub fn score_all(
    cases: &[TestCase],
    metrics: &[Box<dyn Metric>],
) -> Vec<(MetricColumn, Option<MetricFailure>)> {
    metrics
        .iter()
        .map(|metric| {
            let results: Vec<Result<MetricScore, String>> = cases
                .par_iter()
                .map(|c| metric.score(c).map_err(|e| format!("case {}: {e}", c.id)))
                .collect();
            let failed = results.iter().filter(|r| r.is_err()).count();
            let failure = results
                .iter()
                .find_map(|r| r.as_ref().err())
                .map(|e| MetricFailure {
                    metric: metric.id().to_string(),
                    failed_cases: failed,
                    first_error: e.clone(),
                });
            let column = MetricColumn {
                metric: metric.id().to_string(),
                scores: results.into_iter().map(Result::ok).collect(),
            };
            (column, failure)
        })
        .collect()
}

fn select(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Scores the suite with every registered metric, rescales metric and human
/// scores per dataset, and computes per-phenomenon and pooled measures.
/// A metric that fails on any case is reported under `failures` and left
/// out of the tables; the others are unaffected.
pub fn evaluate(
    cases: &[TestCase],
    registry: &MetricRegistry,
    phenomena: &PhenomenonRegistry,
    config: &EvalConfig,
) -> EvaluationReport {
    let scored = score_all(cases, registry.metrics());
    let mut failures = Vec::new();
    let mut columns = Vec::new();
    for (column, failure) in scored {
        if let Some(f) = failure {
            log::error!(
                "metric {} failed on {} case(s): {}",
                f.metric,
                f.failed_cases,
                f.first_error
            );
            failures.push(f);
        }
        columns.push(column);
    }

    let mut rows = Vec::new();
    let mut human_rows = Vec::new();
    let mut taus = Vec::new();
    for dataset in Dataset::ALL {
        let idx: Vec<usize> = (0..cases.len())
            .filter(|&i| cases[i].dataset == dataset)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let human: Vec<f64> = idx.iter().map(|&i| cases[i].human_score).collect();
        let human_norm = rescale(&human);

        // positions within `idx`, grouped by phenomenon in registry order
        let mut groups: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
        for (pos, &i) in idx.iter().enumerate() {
            let p = &cases[i].phenomenon;
            groups
                .entry((phenomena.rank(p), p.clone()))
                .or_default()
                .push(pos);
        }
        let mut group_list: Vec<(String, Vec<usize>)> =
            groups.into_iter().map(|((_, name), v)| (name, v)).collect();
        group_list.push((OVERALL.to_string(), (0..idx.len()).collect()));

        for (name, members) in &group_list {
            let h = select(&human_norm, members);
            let raw: Vec<f64> = members.iter().map(|&p| human[p]).collect();
            human_rows.push(HumanRow {
                dataset,
                group: name.clone(),
                n: members.len(),
                avg_global: h.iter().sum::<f64>() / h.len() as f64,
                avg_local: rescale(&raw).iter().sum::<f64>() / h.len() as f64,
            });
        }

        for column in &columns {
            if failures.iter().any(|f| f.metric == column.metric) {
                continue;
            }
            let values: Vec<f64> = idx
                .iter()
                .map(|&i| column.scores[i].as_ref().expect("metric succeeded").value)
                .collect();
            let norm = rescale(&values);
            let tau = config.tau_rule.tau(&norm);
            taus.push(TauValue {
                dataset,
                metric: column.metric.clone(),
                tau,
            });
            for (name, members) in &group_list {
                let m = select(&norm, members);
                let h = select(&human_norm, members);
                let (avg, mad) = mad_and_avg(&m, &h).expect("groups are non-empty");
                rows.push(GroupRow {
                    dataset,
                    group: name.clone(),
                    metric: column.metric.clone(),
                    n: members.len(),
                    avg,
                    mad,
                    ranking: pairwise_ranking(&m, &h, tau),
                    spearman: spearman(&m, &h),
                });
            }
        }
    }

    EvaluationReport {
        metrics: columns.iter().map(|c| c.metric.clone()).collect(),
        rows,
        human: human_rows,
        taus,
        failures,
        tau_rule: config.tau_rule,
        metadata: config.metadata.clone(),
        columns,
    }
}
