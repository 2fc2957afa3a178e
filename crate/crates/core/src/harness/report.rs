//! Text renderings of evaluation results.

use std::fmt::Write as _;

use serde_json::json;

use crate::harness::evaluate::{EvaluationReport, MetricColumn};
use crate::harness::suite::{Dataset, TestCase};

pub const ANN_SCORE: &str = "Ann. Score";
pub const ANN_SCORE_LOCAL: &str = "Ann. Score (group-normalized)";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn header_comments(report: &EvaluationReport, out: &mut String) {
    let _ = writeln!(out, "# tau_rule\t{}", report.tau_rule);
    for (k, v) in &report.metadata {
        let _ = writeln!(out, "# {k}\t{v}");
    }
    for t in &report.taus {
        let _ = writeln!(out, "# tau\t{}\t{}\t{:.6}", t.dataset, t.metric, t.tau);
    }
    for f in &report.failures {
        let _ = writeln!(
            out,
            "# failed\t{}\t{} case(s)\t{}",
            f.metric, f.failed_cases, f.first_error
        );
    }
}

/// One line per (dataset, group, metric); the human rows come first in
/// each dataset.
pub fn to_tsv(report: &EvaluationReport) -> String {
    let mut out = String::new();
    header_comments(report, &mut out);
    out.push_str("dataset\tgroup\tmetric\tn\tavg\tmad\tranking\tspearman\n");
    for dataset in report.datasets() {
        for h in report.human.iter().filter(|h| h.dataset == dataset) {
            let _ = writeln!(
                out,
                "{}\t{}\t{ANN_SCORE}\t{}\t{:.6}\t\t\t",
                h.dataset, h.group, h.n, h.avg_global
            );
            let _ = writeln!(
                out,
                "{}\t{}\t{ANN_SCORE_LOCAL}\t{}\t{:.6}\t\t\t",
                h.dataset, h.group, h.n, h.avg_local
            );
        }
        for r in report.rows.iter().filter(|r| r.dataset == dataset) {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                r.dataset,
                r.group,
                r.metric,
                r.n,
                r.avg,
                r.mad,
                opt(r.ranking),
                opt(r.spearman)
            );
        }
    }
    out
}

fn md_table(
    report: &EvaluationReport,
    dataset: Dataset,
    title: &str,
    cell: impl Fn(&str, &str) -> String,
    with_human: bool,
) -> String {
    let groups = report.groups(dataset);
    let mut out = format!("### {dataset}: {title}\n\n| Metric |");
    for g in &groups {
        let _ = write!(out, " {g} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(groups.len()));
    out.push('\n');
    if with_human {
        for (label, local) in [(ANN_SCORE, false), (ANN_SCORE_LOCAL, true)] {
            let _ = write!(out, "| {label} |");
            for g in &groups {
                let h = report.human_row(dataset, g).expect("group has a human row");
                let _ = write!(
                    out,
                    " {:.3} |",
                    if local { h.avg_local } else { h.avg_global }
                );
            }
            out.push('\n');
        }
    }
    for metric in report.metrics.iter().filter(|m| !report.failed(m)) {
        let _ = write!(out, "| {metric} |");
        for g in &groups {
            let _ = write!(out, " {} |", cell(metric, g));
        }
        out.push('\n');
    }
    out.push('\n');
    out
}

/// Tables per dataset: `avg ± mad`, ranking score and Spearman's rho.
pub fn to_markdown(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tau rule: `{}`\n", report.tau_rule);
    for dataset in report.datasets() {
        let row = |m: &str, g: &str| report.row(dataset, g, m);
        out.push_str(&md_table(
            report,
            dataset,
            "avg ± mad",
            |m, g| row(m, g).map_or("n/a".into(), |r| format!("{:.3} ± {:.2}", r.avg, r.mad)),
            true,
        ));
        out.push_str(&md_table(
            report,
            dataset,
            "ranking score",
            |m, g| {
                row(m, g)
                    .and_then(|r| r.ranking)
                    .map_or("n/a".into(), |v| format!("{v:.3}"))
            },
            false,
        ));
        out.push_str(&md_table(
            report,
            dataset,
            "Spearman's rho",
            |m, g| {
                row(m, g)
                    .and_then(|r| r.spearman)
                    .map_or("n/a".into(), |v| format!("{v:.3}"))
            },
            false,
        ));
    }
    if !report.failures.is_empty() {
        out.push_str("Failed metrics:\n\n");
        for f in &report.failures {
            let _ = writeln!(
                out,
                "- {}: {} case(s), first error: {}",
                f.metric, f.failed_cases, f.first_error
            );
        }
    }
    out
}

/// A header record followed by one record per row.
pub fn to_jsonl(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let header = json!({
        "type": "meta",
        "metrics": report.metrics,
        "tau_rule": report.tau_rule.to_string(),
        "taus": report.taus,
        "failures": report.failures,
        "metadata": report.metadata,
    });
    out.push_str(&header.to_string());
    out.push('\n');
    for h in &report.human {
        let mut v = serde_json::to_value(h).expect("serializable");
        v["type"] = json!("human");
        out.push_str(&v.to_string());
        out.push('\n');
    }
    for r in &report.rows {
        let mut v = serde_json::to_value(r).expect("serializable");
        v["type"] = json!("row");
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Per-case scores, metric-major in the given order, cases in suite order.
pub fn score_records_jsonl(cases: &[TestCase], columns: &[MetricColumn]) -> String {
    let mut out = String::new();
    for col in columns {
        for (case, score) in cases.iter().zip(&col.scores) {
            let rec = json!({
                "metric": col.metric,
                "id": case.id,
                "dataset": case.dataset,
                "phenomenon": case.phenomenon,
                "value": score.as_ref().map(|s| s.value),
                "components": score.as_ref().map(|s| &s.components),
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
    }
    out
}

pub fn score_records_tsv(cases: &[TestCase], columns: &[MetricColumn]) -> String {
    let mut out = String::from("metric\tid\tdataset\tphenomenon\tvalue\tcomponents\n");
    for col in columns {
        for (case, score) in cases.iter().zip(&col.scores) {
            let (value, comps) = match score {
                Some(s) => (
                    format!("{:.9}", s.value),
                    s.components
                        .iter()
                        .map(|(k, v)| format!("{k}={v:.9}"))
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
                None => ("error".to_string(), String::new()),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                col.metric, case.id, case.dataset, case.phenomenon, value, comps
            );
        }
    }
    out
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// One text file per (dataset, phenomenon) listing each case with the human
/// score and every metric's raw score. Returns `(file name, contents)`.
pub fn phenomenon_files(cases: &[TestCase], report: &EvaluationReport) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for dataset in report.datasets() {
        for group in report.groups(dataset) {
            if group == crate::harness::evaluate::OVERALL {
                continue;
            }
            let mut out = String::from("id\thuman_score");
            for col in &report.columns {
                let _ = write!(out, "\t{}", col.metric);
            }
            out.push_str("\tsentence_a\tsentence_b\n");
            for (i, case) in cases.iter().enumerate() {
                if case.dataset != dataset || case.phenomenon != group {
                    continue;
                }
                let _ = write!(out, "{}\t{}", case.id, case.human_score);
                for col in &report.columns {
                    match &col.scores[i] {
                        Some(s) => {
                            let _ = write!(out, "\t{:.6}", s.value);
                        }
                        None => out.push_str("\terror"),
                    }
                }
                let _ = writeln!(
                    out,
                    "\t{}\t{}",
                    clean(&case.sentence_a),
                    clean(&case.sentence_b)
                );
            }
            files.push((format!("{dataset}_{group}.txt"), out));
        }
    }
    files
}
