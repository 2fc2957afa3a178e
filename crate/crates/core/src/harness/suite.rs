//! Test suite model, loading and descriptive statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::amr::{parse_penman, AmrError, AmrGraph};
use crate::embeddings::Side;
use crate::text::SentencePair;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read suite {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("suite is empty")]
    Empty,
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error("case {case_id}: AMR {side} does not parse: {source}")]
    Amr {
        case_id: String,
        side: Side,
        #[source]
        source: AmrError,
    },
    #[error("duplicate case id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    #[serde(rename = "SICK")]
    Sick,
    #[serde(rename = "STS")]
    Sts,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Sick, Dataset::Sts];

    /// Inclusive range of the native human score scale.
    pub fn score_range(self) -> (f64, f64) {
        match self {
            Dataset::Sick => (1.0, 5.0),
            Dataset::Sts => (0.0, 5.0),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Sick => "SICK",
            Dataset::Sts => "STS",
        })
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SICK" => Ok(Dataset::Sick),
            "STS" | "STSB" | "STS-B" => Ok(Dataset::Sts),
            _ => Err(format!("unknown dataset `{s}` (expected SICK or STS)")),
        }
    }
}

fn alias_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Known phenomena with their accepted spellings. The default set has eleven
/// entries; more can be added from a file without code changes.
#[derive(Debug, Clone)]
pub struct PhenomenonRegistry {
    names: Vec<String>,
    aliases: BTreeMap<String, usize>,
}

pub const DEFAULT_PHENOMENA: [(&str, &[&str]); 11] = [
    ("Antonymy", &["ant"]),
    ("Article", &["art"]),
    ("Aspect", &["asp"]),
    ("CoHyponymy", &["co-hyponymy", "cohyp", "co-hyp"]),
    ("Hyponymy", &["hyp"]),
    ("Negation", &["neg"]),
    ("Omission", &["om", "omis"]),
    (
        "PartialSynonymy",
        &["part. synonymy", "partsyn", "part.syn", "synonymy"],
    ),
    ("Passive", &["pass"]),
    (
        "SemanticRoles",
        &["srl", "semantic role labeling", "semantic roles", "roles"],
    ),
    (
        "SubordinateClauses",
        &["sub. clauses", "subcl", "sub. clause", "subordinate clause"],
    ),
];

impl Default for PhenomenonRegistry {
    fn default() -> Self {
        let mut r = PhenomenonRegistry {
            names: Vec::new(),
            aliases: BTreeMap::new(),
        };
        for (name, aliases) in DEFAULT_PHENOMENA {
            r.add(name, aliases.iter().copied());
        }
        r
    }
}

impl PhenomenonRegistry {
    pub fn add<'a>(&mut self, name: &str, aliases: impl IntoIterator<Item = &'a str>) {
        let idx = match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        };
        self.aliases.insert(alias_key(name), idx);
        for a in aliases {
            self.aliases.insert(alias_key(a), idx);
        }
    }

    /// Extends the registry from lines `Name alias1, alias2`; `#` starts a
    /// comment.
    pub fn extend_from_str(&mut self, text: &str) {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            self.add(
                name,
                rest.split(',').map(str::trim).filter(|a| !a.is_empty()),
            );
        }
    }

    pub fn resolve(&self, label: &str) -> Option<&str> {
        self.aliases
            .get(&alias_key(label))
            .map(|&i| self.names[i].as_str())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Position in registry order, used to sort report groups.
    pub fn rank(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or(usize::MAX)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub id: String,
    pub dataset: Dataset,
    pub phenomenon: String,
    pub sentence_a: String,
    pub sentence_b: String,
    pub amr_a: AmrGraph,
    pub amr_b: AmrGraph,
    pub human_score: f64,
    pub lemmas_a: Option<Vec<String>>,
    pub lemmas_b: Option<Vec<String>>,
    /// Reference is side A, candidate side B.
    pub pair: SentencePair,
}

impl TestCase {
    pub fn amr(&self, side: Side) -> &AmrGraph {
        match side {
            Side::A => &self.amr_a,
            Side::B => &self.amr_b,
        }
    }

    pub fn lemmas(&self, side: Side) -> Option<&[String]> {
        match side {
            Side::A => self.lemmas_a.as_deref(),
            Side::B => self.lemmas_b.as_deref(),
        }
    }

    pub fn tokens(&self, side: Side) -> &[String] {
        match side {
            Side::A => &self.pair.reference.tokens,
            Side::B => &self.pair.candidate.tokens,
        }
    }
}

/// Flat on-disk record, one per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub dataset: String,
    pub phenomenon: String,
    pub sentence_a: String,
    pub sentence_b: String,
    pub amr_a: String,
    pub amr_b: String,
    pub human_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas_a: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas_b: Option<Vec<String>>,
}

impl From<&TestCase> for CaseRecord {
    fn from(c: &TestCase) -> Self {
        CaseRecord {
            id: c.id.clone(),
            dataset: c.dataset.to_string(),
            phenomenon: c.phenomenon.clone(),
            sentence_a: c.sentence_a.clone(),
            sentence_b: c.sentence_b.clone(),
            amr_a: c.amr_a.to_penman(),
            amr_b: c.amr_b.to_penman(),
            human_score: c.human_score,
            lemmas_a: c.lemmas_a.clone(),
            lemmas_b: c.lemmas_b.clone(),
        }
    }
}

impl CaseRecord {
    pub fn into_case(self, registry: &PhenomenonRegistry) -> Result<TestCase, SuiteError> {
        let schema = |message: String| SuiteError::Schema {
            location: format!("case {}", self.id),
            message,
        };
        let dataset: Dataset = self.dataset.parse().map_err(schema)?;
        let phenomenon = registry
            .resolve(&self.phenomenon)
            .ok_or_else(|| schema(format!("unknown phenomenon `{}`", self.phenomenon)))?
            .to_string();
        let (lo, hi) = dataset.score_range();
        if !(lo..=hi).contains(&self.human_score) {
            return Err(schema(format!(
                "human score {} outside {dataset} range [{lo}, {hi}]",
                self.human_score
            )));
        }
        let parse = |text: &str, side| {
            parse_penman(text).map_err(|source| SuiteError::Amr {
                case_id: self.id.clone(),
                side,
                source,
            })
        };
        let amr_a = parse(&self.amr_a, Side::A)?;
        let amr_b = parse(&self.amr_b, Side::B)?;
        let pair = SentencePair::new(&self.sentence_a, &self.sentence_b);
        Ok(TestCase {
            id: self.id,
            dataset,
            phenomenon,
            sentence_a: self.sentence_a,
            sentence_b: self.sentence_b,
            amr_a,
            amr_b,
            human_score: self.human_score,
            lemmas_a: self.lemmas_a,
            lemmas_b: self.lemmas_b,
            pair,
        })
    }
}

const FIELD_ALIASES: [(&str, &[&str]); 9] = [
    ("id", &["id", "case_id", "pair_id", "idx"]),
    ("dataset", &["dataset", "source", "data"]),
    (
        "phenomenon",
        &["phenomenon", "phenomena", "category", "test"],
    ),
    (
        "sentence_a",
        &[
            "sentence_a",
            "sent_a",
            "sent1",
            "sentence1",
            "s1",
            "ref",
            "reference",
        ],
    ),
    (
        "sentence_b",
        &[
            "sentence_b",
            "sent_b",
            "sent2",
            "sentence2",
            "s2",
            "cand",
            "candidate",
        ],
    ),
    ("amr_a", &["amr_a", "amr1", "amr_1", "ref_amr", "amr_ref"]),
    ("amr_b", &["amr_b", "amr2", "amr_2", "cand_amr", "amr_cand"]),
    (
        "human_score",
        &["human_score", "score", "gold", "relatedness", "similarity"],
    ),
    ("lemmas_a", &["lemmas_a", "lemma_a"]),
];

fn field<'v>(obj: &'v Map<String, Value>, name: &str) -> Option<&'v Value> {
    let aliases = FIELD_ALIASES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| *a)
        .unwrap_or(&[]);
    aliases
        .iter()
        .chain(std::iter::once(&name))
        .find_map(|a| obj.get(*a))
}

fn string_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Builds a flat record from a loosely keyed object, filling dataset and
/// phenomenon from the enclosing groups when the object lacks them.
fn record_from_object(
    obj: &Map<String, Value>,
    dataset: Option<&str>,
    phenomenon: Option<&str>,
    fallback_id: String,
) -> Result<CaseRecord, SuiteError> {
    let id = field(obj, "id").and_then(string_of).unwrap_or(fallback_id);
    let schema = |message: String| SuiteError::Schema {
        location: format!("case {id}"),
        message,
    };
    let text = |name: &str, inherited: Option<&str>| -> Result<String, SuiteError> {
        field(obj, name)
            .and_then(string_of)
            .or_else(|| inherited.map(str::to_string))
            .ok_or_else(|| schema(format!("missing field `{name}`")))
    };
    let human_score = match field(obj, "human_score") {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| schema("non-finite human score".into()))?,
        Some(Value::String(s)) => s
            .trim()
            .parse()
            .map_err(|_| schema(format!("human score `{s}` is not a number")))?,
        _ => return Err(schema("missing field `human_score`".into())),
    };
    let lemmas = |keys: &[&str]| -> Option<Vec<String>> {
        keys.iter().find_map(|k| obj.get(*k)).and_then(|v| {
            v.as_array().map(|a| {
                a.iter()
                    .filter_map(|x| x.as_str().map(str::to_string))
                    .collect()
            })
        })
    };
    Ok(CaseRecord {
        dataset: text("dataset", dataset)?,
        phenomenon: text("phenomenon", phenomenon)?,
        sentence_a: text("sentence_a", None)?,
        sentence_b: text("sentence_b", None)?,
        amr_a: text("amr_a", None)?,
        amr_b: text("amr_b", None)?,
        human_score,
        lemmas_a: lemmas(&["lemmas_a", "lemma_a"]),
        lemmas_b: lemmas(&["lemmas_b", "lemma_b"]),
        id,
    })
}

/// Flattens grouped JSON (`{dataset: {phenomenon: [cases]}}`,
/// `{phenomenon: [cases]}` or a bare array) into records.
pub fn import_grouped(value: &Value) -> Result<Vec<CaseRecord>, SuiteError> {
    fn walk(
        v: &Value,
        dataset: Option<&str>,
        phenomenon: Option<&str>,
        out: &mut Vec<CaseRecord>,
    ) -> Result<(), SuiteError> {
        match v {
            Value::Array(items) => {
                for item in items {
                    walk(item, dataset, phenomenon, out)?;
                }
                Ok(())
            }
            Value::Object(obj) if field(obj, "amr_a").is_some() => {
                let fallback = format!(
                    "{}-{}-{}",
                    dataset.unwrap_or("x"),
                    phenomenon.unwrap_or("x"),
                    out.len()
                );
                out.push(record_from_object(obj, dataset, phenomenon, fallback)?);
                Ok(())
            }
            Value::Object(obj) => {
                for (key, child) in obj {
                    if key.parse::<Dataset>().is_ok() && dataset.is_none() {
                        walk(child, Some(key), phenomenon, out)?;
                    } else if phenomenon.is_none() {
                        walk(child, dataset, Some(key), out)?;
                    } else {
                        // plain id-keyed container
                        walk(child, dataset, phenomenon, out)?;
                    }
                }
                Ok(())
            }
            _ => Err(SuiteError::Schema {
                location: format!(
                    "group {}/{}",
                    dataset.unwrap_or("?"),
                    phenomenon.unwrap_or("?")
                ),
                message: "expected an object or array of cases".into(),
            }),
        }
    }
    let mut out = Vec::new();
    walk(value, None, None, &mut out)?;
    Ok(out)
}

/// Parses suite text: line-delimited records, or one grouped JSON document.
pub fn parse_suite(text: &str, registry: &PhenomenonRegistry) -> Result<Vec<TestCase>, SuiteError> {
    if text.trim().is_empty() {
        return Err(SuiteError::Empty);
    }
    let records = match serde_json::from_str::<Value>(text) {
        Ok(value) if !matches!(&value, Value::Object(o) if field(o, "amr_a").is_some()) => {
            import_grouped(&value)?
        }
        _ => {
            let mut records = Vec::new();
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let value: Value = serde_json::from_str(line).map_err(|e| SuiteError::Json {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
                let obj = value.as_object().ok_or_else(|| SuiteError::Schema {
                    location: format!("line {}", idx + 1),
                    message: "expected a JSON object".into(),
                })?;
                records.push(record_from_object(
                    obj,
                    None,
                    None,
                    format!("line-{}", idx + 1),
                )?);
            }
            records
        }
    };
    if records.is_empty() {
        return Err(SuiteError::Empty);
    }
    let mut seen = HashSet::new();
    let mut cases = Vec::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.clone()) {
            return Err(SuiteError::DuplicateId(r.id));
        }
        cases.push(r.into_case(registry)?);
    }
    Ok(cases)
}

pub fn load_suite(
    path: impl AsRef<Path>,
    registry: &PhenomenonRegistry,
) -> Result<Vec<TestCase>, SuiteError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_suite(&text, registry)
}

/// Writes cases in the line-delimited format.
pub fn write_suite(cases: &[TestCase]) -> String {
    let mut out = String::new();
    for c in cases {
        out.push_str(&serde_json::to_string(&CaseRecord::from(c)).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub dataset: Dataset,
    pub phenomenon: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteStats {
    pub groups: Vec<GroupStats>,
    pub totals: BTreeMap<Dataset, usize>,
    pub total: usize,
}

impl SuiteStats {
    pub fn count(&self, dataset: Dataset, phenomenon: &str) -> usize {
        self.groups
            .iter()
            .find(|g| g.dataset == dataset && g.phenomenon == phenomenon)
            .map_or(0, |g| g.count)
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn describe(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, median(values), std, std / n.sqrt())
}

/// Per-(dataset, phenomenon) counts and human score statistics, ordered by
/// dataset and registry order.
pub fn validate_suite(cases: &[TestCase], registry: &PhenomenonRegistry) -> SuiteStats {
    let mut groups: BTreeMap<(Dataset, usize, String), Vec<f64>> = BTreeMap::new();
    let mut totals = BTreeMap::new();
    for c in cases {
        groups
            .entry((
                c.dataset,
                registry.rank(&c.phenomenon),
                c.phenomenon.clone(),
            ))
            .or_default()
            .push(c.human_score);
        *totals.entry(c.dataset).or_insert(0) += 1;
    }
    let groups = groups
        .into_iter()
        .map(|((dataset, _, phenomenon), scores)| {
            let (mean, median, std, stderr) = describe(&scores);
            GroupStats {
                dataset,
                phenomenon,
                count: scores.len(),
                mean,
                median,
                std,
                stderr,
            }
        })
        .collect();
    SuiteStats {
        groups,
        totals,
        total: cases.len(),
    }
}
