//! Word vectors: a static table (GloVe text format) and a per-sentence
//! contextual store produced offline.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding file is empty")]
    Empty,
    #[error("line {line}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no contextual embeddings for case `{case_id}` side {side}")]
    Missing { case_id: String, side: Side },
}

/// Which sentence of a test case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(alias = "a")]
    A,
    #[serde(alias = "b")]
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Side::A),
            "B" | "b" => Ok(Side::B),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    LemmaFallback,
    OovZero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenVector {
    pub token: String,
    pub lemma: String,
    pub vector: Vec<f64>,
    pub provenance: Provenance,
}

/// Word -> vector table with a single dimension.
#[derive(Debug, Clone)]
pub struct StaticEmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
    duplicates: Vec<String>,
}

impl StaticEmbeddingTable {
    pub fn from_entries<I, S>(entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table: Option<StaticEmbeddingTable> = None;
        for (line, (word, vector)) in entries.into_iter().enumerate() {
            let t = table.get_or_insert_with(|| StaticEmbeddingTable {
                dimension: vector.len(),
                entries: HashMap::new(),
                duplicates: Vec::new(),
            });
            t.insert(line + 1, word.into(), vector)?;
        }
        table.ok_or(EmbeddingError::Empty)
    }

    fn insert(
        &mut self,
        line: usize,
        word: String,
        vector: Vec<f64>,
    ) -> Result<(), EmbeddingError> {
        if vector.len() != self.dimension || vector.is_empty() {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if self.entries.insert(word.clone(), vector).is_some() {
            log::warn!("duplicate embedding for `{word}` on line {line}; keeping the last one");
            self.duplicates.push(word);
        }
        Ok(())
    }

    /// Reads `word v1 ... vd` lines. A leading `count dim` header (word2vec
    /// text format) is skipped. When `vocabulary` is given, only those words
    /// are kept, which keeps large GloVe files cheap to load.
    pub fn from_reader<R: BufRead>(
        reader: R,
        vocabulary: Option<&HashSet<String>>,
    ) -> Result<Self, EmbeddingError> {
        let mut table: Option<StaticEmbeddingTable> = None;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: "<reader>".into(),
                source,
            })?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if lineno == 1
                && rest.len() == 1
                && word.parse::<usize>().is_ok()
                && rest[0].parse::<usize>().is_ok()
            {
                continue;
            }
            let dim = rest.len();
            let t = table.get_or_insert_with(|| StaticEmbeddingTable {
                dimension: dim,
                entries: HashMap::new(),
                duplicates: Vec::new(),
            });
            if dim != t.dimension || dim == 0 {
                return Err(EmbeddingError::DimensionMismatch {
                    line: lineno,
                    expected: t.dimension,
                    found: dim,
                });
            }
            if vocabulary.is_some_and(|v| !v.contains(word)) {
                continue;
            }
            let vector = rest
                .iter()
                .map(|x| x.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?;
            t.insert(lineno, word.to_string(), vector)?;
        }
        table.ok_or(EmbeddingError::Empty)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// Words that appeared more than once while loading.
    pub fn duplicate_words(&self) -> &[String] {
        &self.duplicates
    }

    /// Exact token first, then its lemma, then a zero vector.
    pub fn lookup(&self, token: &str, lemma: &str) -> TokenVector {
        let (vector, provenance) = if let Some(v) = self.entries.get(token) {
            (v.clone(), Provenance::Exact)
        } else if let Some(v) = self.entries.get(lemma) {
            (v.clone(), Provenance::LemmaFallback)
        } else {
            (vec![0.0; self.dimension], Provenance::OovZero)
        };
        // A stored all-zero vector is indistinguishable from an unknown word.
        let provenance = if vector.iter().all(|&x| x == 0.0) {
            Provenance::OovZero
        } else {
            provenance
        };
        TokenVector {
            token: token.to_string(),
            lemma: lemma.to_string(),
            vector,
            provenance,
        }
    }
}

pub fn load_static_table(path: impl AsRef<Path>) -> Result<StaticEmbeddingTable, EmbeddingError> {
    load_static_table_filtered(path, None)
}

pub fn load_static_table_filtered(
    path: impl AsRef<Path>,
    vocabulary: Option<&HashSet<String>>,
) -> Result<StaticEmbeddingTable, EmbeddingError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    StaticEmbeddingTable::from_reader(BufReader::new(file), vocabulary)
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Tokens and their vectors for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualSentence {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct ContextualRecord {
    id: String,
    side: Side,
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

/// Per (case, side) token vectors, loaded from line-delimited JSON records
/// `{id, side, tokens, vectors, dim}`. A record carrying a `manifest` key
/// is treated as a header.
#[derive(Debug, Clone, Default)]
pub struct ContextualEmbeddingStore {
    dimension: usize,
    sentences: HashMap<(String, Side), ContextualSentence>,
    manifest: Option<serde_json::Value>,
}

impl ContextualEmbeddingStore {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut store = ContextualEmbeddingStore::default();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: "<reader>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| EmbeddingError::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?;
            if let Some(manifest) = value.get("manifest") {
                store.manifest = Some(manifest.clone());
                continue;
            }
            let rec: ContextualRecord =
                serde_json::from_value(value).map_err(|e| EmbeddingError::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?;
            store.insert(lineno, rec)?;
        }
        if store.sentences.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(store)
    }

    fn insert(&mut self, line: usize, rec: ContextualRecord) -> Result<(), EmbeddingError> {
        if self.sentences.is_empty() {
            self.dimension = rec.dim;
        }
        if rec.dim != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                expected: self.dimension,
                found: rec.dim,
            });
        }
        if rec.vectors.len() != rec.tokens.len() {
            return Err(EmbeddingError::Parse {
                line,
                message: format!(
                    "{} tokens but {} vector rows",
                    rec.tokens.len(),
                    rec.vectors.len()
                ),
            });
        }
        if let Some(row) = rec.vectors.iter().find(|r| r.len() != self.dimension) {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                expected: self.dimension,
                found: row.len(),
            });
        }
        self.sentences.insert(
            (rec.id, rec.side),
            ContextualSentence {
                tokens: rec.tokens,
                vectors: rec.vectors,
            },
        );
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn manifest(&self) -> Option<&serde_json::Value> {
        self.manifest.as_ref()
    }

    pub fn sentence(
        &self,
        case_id: &str,
        side: Side,
    ) -> Result<&ContextualSentence, EmbeddingError> {
        self.sentences
            .get(&(case_id.to_string(), side))
            .ok_or_else(|| EmbeddingError::Missing {
                case_id: case_id.to_string(),
                side,
            })
    }
}

pub fn load_contextual_store(
    path: impl AsRef<Path>,
) -> Result<ContextualEmbeddingStore, EmbeddingError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ContextualEmbeddingStore::from_reader(BufReader::new(file))
}
