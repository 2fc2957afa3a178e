use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_amrmeter"));
    c.env("AMRMETER_THREADS", "2");
    c
}

fn core_data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn suite_lines(n: usize) -> String {
    fs::read_to_string(core_data("mini_suite.jsonl"))
        .unwrap()
        .lines()
        .take(n)
        .map(|l| format!("{l}\n"))
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn validate_ok_and_prints_counts() {
    let suite = core_data("mini_suite.jsonl");
    let o = run(&["validate", "--suite", suite.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("dataset\tphenomenon\tcount"));
    assert!(out.contains("SICK\tNegation\t2\t"));
    assert!(out.contains("STS\tTotal\t4"));
}

#[test]
fn validate_rejects_broken_amr_with_case_id() {
    let dir = tempfile::tempdir().unwrap();
    let text = suite_lines(3).replace("(xv0 / and :op1", "(xv0 / and :op1 (((");
    let path = write(dir.path(), "broken.jsonl", &text);
    let o = run(&["validate", "--suite", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("neg2"), "{}", stderr(&o));
}

#[test]
fn validate_rejects_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "empty.jsonl", "");
    let o = run(&["validate", "--suite", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

#[test]
fn score_bleu_two_cases() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "two.jsonl", &suite_lines(2));
    let o = run(&["score", "--suite", &path, "--metrics", "bleu"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let records: Vec<serde_json::Value> = out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["metric"], "bleu");
    assert_eq!(records[1]["id"], "neg1");
    assert!(records.iter().all(|r| r["value"].as_f64().is_some()));
}

#[test]
fn contextual_metric_without_store_names_flag() {
    let suite = core_data("mini_suite.jsonl");
    let o = run(&[
        "score",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "graco",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--ctx-emb"), "{}", stderr(&o));
    let o = run(&[
        "score",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "s2match",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--static-emb"), "{}", stderr(&o));
}

#[test]
fn unknown_metric_is_invalid_input() {
    let suite = core_data("mini_suite.jsonl");
    let o = run(&[
        "score",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "rouge",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rouge"));
}

#[test]
fn fixed_seed_gives_identical_output() {
    let suite = core_data("mini_suite.jsonl");
    let table = core_data("toy_vectors.txt");
    let args = [
        "score",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "smatch,s2match,wwlk,graco_glo_red",
        "--static-emb",
        table.to_str().unwrap(),
        "--seed",
        "17",
        "--format",
        "tsv",
    ];
    let a = run(&args);
    let b = bin()
        .env("AMRMETER_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 4 * 18);
}

#[test]
fn contextual_store_missing_case_is_partial_failure() {
    let suite = core_data("mini_suite.jsonl");
    let store = core_data("toy_contextual.jsonl");
    let o = run(&[
        "score",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "bleu,bertscore",
        "--ctx-emb",
        store.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bertscore"));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.contains("\"id\":\"dog_cat\"")
        && l.contains("bertscore")
        && !l.contains("null")));
}

#[test]
fn evaluate_writes_reports_and_phenomenon_files() {
    let dir = tempfile::tempdir().unwrap();
    let suite = core_data("mini_suite.jsonl");
    let out = dir.path().join("out");
    let o = run(&[
        "evaluate",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "smatch,chrf",
        "--format",
        "md",
        "--format",
        "tsv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains(" ± "));
    assert!(md.contains("| chrf++ |"));
    let tsv = fs::read_to_string(out.join("report.tsv")).unwrap();
    assert!(tsv.contains("# seed\t0"));
    assert!(out.join("phenomena/SICK_Passive.txt").exists());
}

#[test]
fn evaluate_single_phenomenon_has_one_group_and_overall() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = suite_lines(18)
        .lines()
        .filter(|l| l.contains("\"Negation\""))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = write(dir.path(), "neg.jsonl", &lines);
    let o = run(&[
        "evaluate",
        "--suite",
        &path,
        "--metrics",
        "smatch",
        "--format",
        "tsv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let groups: std::collections::BTreeSet<&str> = out
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("dataset"))
        .map(|l| l.split('\t').nth(1).unwrap())
        .collect();
    assert_eq!(
        groups.into_iter().collect::<Vec<_>>(),
        vec!["Negation", "Overall"]
    );
}

#[test]
fn bad_tau_rule_is_rejected() {
    let suite = core_data("mini_suite.jsonl");
    let o = run(&[
        "evaluate",
        "--suite",
        suite.to_str().unwrap(),
        "--metrics",
        "bleu",
        "--tau-rule",
        "median",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let suite = core_data("mini_suite.jsonl");
    let out = dir.path().join("converted.jsonl");
    let o = run(&[
        "convert",
        "--suite",
        suite.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["validate", "--suite", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("SICK\tTotal\t14"));
}
