//! Sentence-level textual metrics: BLEU, chrF++, a simplified Meteor and
//! BERTScore-style greedy matching over precomputed token vectors.
//!
//! All metrics read the reference from [`SentencePair::reference`] and the
//! candidate from [`SentencePair::candidate`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use thiserror::Error;

use crate::embeddings::{cosine, ContextualEmbeddingStore, EmbeddingError, Side};
use crate::score::MetricScore;

pub const BLEU: &str = "bleu";
pub const CHRF_PP: &str = "chrf++";
pub const METEOR_LITE: &str = "meteor_lite";
pub const BERTSCORE: &str = "bertscore";

/// Lowercases, splits on whitespace and detaches every punctuation
/// character as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() {
                word.extend(c.to_lowercase());
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Sentence { raw, tokens }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    pub reference: Sentence,
    pub candidate: Sentence,
}

impl SentencePair {
    pub fn new(reference: &str, candidate: &str) -> Self {
        SentencePair {
            reference: Sentence::new(reference),
            candidate: Sentence::new(candidate),
        }
    }
}

fn ngram_counts<T: std::hash::Hash + Eq + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || items.len() < n {
        return counts;
    }
    for w in items.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

fn clipped_matches<K: std::hash::Hash + Eq>(
    hyp: &HashMap<K, usize>,
    reference: &HashMap<K, usize>,
) -> usize {
    hyp.iter()
        .map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0)))
        .sum()
}

// ---------------------------------------------------------------------------
// BLEU

/// Smoothing constant of the "method 4" scheme.
pub const BLEU_SMOOTHING_K: f64 = 5.0;

/// Sentence BLEU with uniform weights over 1..=max_n and method-4 smoothing:
/// the i-th zero-count precision becomes `1 / (2^i * K / ln(len)) / denom`.
pub fn bleu(pair: &SentencePair, max_n: usize) -> MetricScore {
    let hyp = &pair.candidate.tokens;
    let reference = &pair.reference.tokens;
    let mut score = MetricScore::new(BLEU, 0.0);
    if hyp.is_empty() {
        log::warn!("empty BLEU candidate; scoring 0");
        return score;
    }
    let hyp_len = hyp.len();
    let ref_len = reference.len();
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    score.components.insert("bp".into(), bp);

    let mut precisions = Vec::with_capacity(max_n);
    let mut numerators = Vec::with_capacity(max_n);
    let mut denominators = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let h = ngram_counts(hyp, n);
        let r = ngram_counts(reference, n);
        let num = clipped_matches(&h, &r);
        let den = h.values().sum::<usize>().max(1);
        numerators.push(num);
        denominators.push(den);
        precisions.push(num as f64 / den as f64);
    }
    if numerators.first().copied().unwrap_or(0) == 0 {
        return score;
    }
    let mut inverse_count = 1;
    for i in 0..max_n {
        if numerators[i] == 0 {
            precisions[i] = if hyp_len > 1 {
                let smoothed =
                    1.0 / (2f64.powi(inverse_count) * BLEU_SMOOTHING_K / (hyp_len as f64).ln());
                inverse_count += 1;
                smoothed / denominators[i] as f64
            } else {
                f64::MIN_POSITIVE
            };
        }
        score
            .components
            .insert(format!("p{}", i + 1), precisions[i]);
    }
    let weight = 1.0 / max_n as f64;
    let log_sum: f64 = precisions.iter().map(|p| weight * p.ln()).sum();
    score.value = bp * log_sum.exp();
    score
}

// ---------------------------------------------------------------------------
// chrF++

#[derive(Debug, Clone, Copy)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

fn f_beta(matches: usize, hyp_total: usize, ref_total: usize, beta: f64) -> f64 {
    if matches == 0 || hyp_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = matches as f64 / hyp_total as f64;
    let r = matches as f64 / ref_total as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (b2 * p + r)
}

/// chrF++: mean of per-order F-beta scores over character n-grams
/// (whitespace removed) and word n-grams. Orders where neither side has any
/// n-gram are skipped.
pub fn chrf_pp(pair: &SentencePair, params: ChrfParams) -> MetricScore {
    let chars = |s: &Sentence| -> Vec<char> {
        s.raw
            .chars()
            .filter(|c| !c.is_whitespace())
            .flat_map(char::to_lowercase)
            .collect()
    };
    let hyp_chars = chars(&pair.candidate);
    let ref_chars = chars(&pair.reference);

    let mut per_order = Vec::new();
    let mut score = MetricScore::new(CHRF_PP, 0.0);
    for n in 1..=params.char_order {
        let h = ngram_counts(&hyp_chars, n);
        let r = ngram_counts(&ref_chars, n);
        let (ht, rt) = (h.values().sum::<usize>(), r.values().sum::<usize>());
        if ht + rt == 0 {
            continue;
        }
        let f = f_beta(clipped_matches(&h, &r), ht, rt, params.beta);
        score.components.insert(format!("char{n}"), f);
        per_order.push(f);
    }
    for n in 1..=params.word_order {
        let h = ngram_counts(&pair.candidate.tokens, n);
        let r = ngram_counts(&pair.reference.tokens, n);
        let (ht, rt) = (h.values().sum::<usize>(), r.values().sum::<usize>());
        if ht + rt == 0 {
            continue;
        }
        let f = f_beta(clipped_matches(&h, &r), ht, rt, params.beta);
        score.components.insert(format!("word{n}"), f);
        per_order.push(f);
    }
    if !per_order.is_empty() {
        score.value = per_order.iter().sum::<f64>() / per_order.len() as f64;
    }
    score
}

// ---------------------------------------------------------------------------
// Meteor (simplified)

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: expected `word<TAB>syn1,syn2,...`")]
    Malformed { line: usize },
}

/// Symmetric synonym relation read from `word<TAB>syn1,syn2,...` lines.
#[derive(Debug, Clone, Default)]
pub struct SynonymLexicon {
    pairs: HashSet<(String, String)>,
}

impl SynonymLexicon {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut lex = SynonymLexicon::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| LexiconError::Io {
                path: "<reader>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, syns) = line
                .split_once('\t')
                .ok_or(LexiconError::Malformed { line: idx + 1 })?;
            for syn in syns.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                lex.add(word.trim(), syn);
            }
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn add(&mut self, a: &str, b: &str) {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        self.pairs.insert((a.clone(), b.clone()));
        self.pairs.insert((b, a));
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Search budget per alignment stage before settling for the best so far.
const ALIGN_NODE_BUDGET: usize = 200_000;

fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    1 + sorted
        .windows(2)
        .filter(|w| w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1)
        .count()
}

struct StageSearch<'a> {
    candidates: &'a [(usize, Vec<usize>)],
    fixed: &'a [(usize, usize)],
    used: Vec<bool>,
    chosen: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    best_key: (usize, usize),
    nodes: usize,
}

impl StageSearch<'_> {
    fn key(&self) -> (usize, usize) {
        let all: Vec<_> = self.fixed.iter().chain(&self.chosen).copied().collect();
        (self.chosen.len(), usize::MAX - count_chunks(&all))
    }

    fn run(&mut self, idx: usize) {
        self.nodes += 1;
        if idx == self.candidates.len() {
            let key = self.key();
            if key > self.best_key {
                self.best_key = key;
                self.best = self.chosen.clone();
            }
            return;
        }
        if self.nodes > ALIGN_NODE_BUDGET {
            return;
        }
        if self.chosen.len() + (self.candidates.len() - idx) < self.best_key.0 {
            return;
        }
        let (h, refs) = &self.candidates[idx];
        for &r in refs {
            if !self.used[r] {
                self.used[r] = true;
                self.chosen.push((*h, r));
                self.run(idx + 1);
                self.chosen.pop();
                self.used[r] = false;
            }
        }
        self.run(idx + 1);
    }
}

/// Staged one-to-one unigram alignment: exact, then stem, then synonym.
/// Each stage only sees words left unaligned by earlier stages and picks the
/// alignment with the most matches, breaking ties by fewest chunks.
pub fn meteor_align(
    hyp: &[String],
    reference: &[String],
    lexicon: Option<&SynonymLexicon>,
) -> Vec<(usize, usize)> {
    let stemmer = Stemmer::create(Algorithm::English);
    let hyp_stems: Vec<String> = hyp.iter().map(|w| stemmer.stem(w).into_owned()).collect();
    let ref_stems: Vec<String> = reference
        .iter()
        .map(|w| stemmer.stem(w).into_owned())
        .collect();

    type StageFn<'a> = Box<dyn Fn(usize, usize) -> bool + 'a>;
    let mut stages: Vec<StageFn> = vec![
        Box::new(|i, j| hyp[i] == reference[j]),
        Box::new(|i, j| hyp_stems[i] == ref_stems[j]),
    ];
    if let Some(lex) = lexicon {
        stages.push(Box::new(move |i, j| {
            lex.are_synonyms(&hyp[i], &reference[j])
        }));
    }

    let mut alignment: Vec<(usize, usize)> = Vec::new();
    for matches in &stages {
        let hyp_done: HashSet<usize> = alignment.iter().map(|p| p.0).collect();
        let ref_done: HashSet<usize> = alignment.iter().map(|p| p.1).collect();
        let candidates: Vec<(usize, Vec<usize>)> = (0..hyp.len())
            .filter(|i| !hyp_done.contains(i))
            .map(|i| {
                let refs: Vec<usize> = (0..reference.len())
                    .filter(|j| !ref_done.contains(j) && matches(i, *j))
                    .collect();
                (i, refs)
            })
            .filter(|(_, refs)| !refs.is_empty())
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let mut search = StageSearch {
            candidates: &candidates,
            fixed: &alignment,
            used: vec![false; reference.len()],
            chosen: Vec::new(),
            best: Vec::new(),
            best_key: (0, 0),
            nodes: 0,
        };
        search.run(0);
        let best = search.best;
        alignment.extend(best);
    }
    alignment.sort_unstable();
    alignment
}

/// Meteor-style score: `Fmean * (1 - gamma * (chunks / matches)^beta)` with
/// `Fmean = P*R / (alpha*P + (1-alpha)*R)`.
pub fn meteor_lite(
    pair: &SentencePair,
    lexicon: Option<&SynonymLexicon>,
    params: MeteorParams,
) -> MetricScore {
    let hyp = &pair.candidate.tokens;
    let reference = &pair.reference.tokens;
    let mut score = MetricScore::new(METEOR_LITE, 0.0);
    if hyp.is_empty() || reference.is_empty() {
        return score;
    }
    let alignment = meteor_align(hyp, reference, lexicon);
    let m = alignment.len();
    score.components.insert("matches".into(), m as f64);
    if m == 0 {
        return score;
    }
    let p = m as f64 / hyp.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let chunks = count_chunks(&alignment);
    let frag = chunks as f64 / m as f64;
    let penalty = params.gamma * frag.powf(params.beta);
    score.value = fmean * (1.0 - penalty);
    score.components.insert("precision".into(), p);
    score.components.insert("recall".into(), r);
    score.components.insert("fmean".into(), fmean);
    score.components.insert("chunks".into(), chunks as f64);
    score.components.insert("penalty".into(), penalty);
    score
}

// ---------------------------------------------------------------------------
// BERTScore

/// Greedy max-cosine matching between token vectors, no IDF weighting.
/// Precision averages over candidate tokens, recall over reference tokens.
pub fn bert_score_vectors(
    reference: &[Vec<f64>],
    candidate: &[Vec<f64>],
) -> Result<MetricScore, EmbeddingError> {
    let mut score = MetricScore::new(BERTSCORE, 0.0);
    if reference.is_empty() || candidate.is_empty() {
        return Ok(score.with("precision", 0.0).with("recall", 0.0));
    }
    let mut sim = vec![vec![0.0; reference.len()]; candidate.len()];
    for (i, c) in candidate.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            sim[i][j] = cosine(c, r)?;
        }
    }
    let precision = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / candidate.len() as f64;
    let recall = (0..reference.len())
        .map(|j| {
            sim.iter()
                .map(|row| row[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / reference.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    score.value = f1;
    Ok(score.with("precision", precision).with("recall", recall))
}

/// BERTScore F1 for a stored case: side A is the reference, side B the
/// candidate.
pub fn bert_score(
    store: &ContextualEmbeddingStore,
    case_id: &str,
) -> Result<MetricScore, EmbeddingError> {
    let reference = store.sentence(case_id, Side::A)?;
    let candidate = store.sentence(case_id, Side::B)?;
    bert_score_vectors(&reference.vectors, &candidate.vectors)
}

/// Distinct tokens of a sentence, for vocabulary filtering.
pub fn vocabulary<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> BTreeSet<String> {
    sentences
        .into_iter()
        .flat_map(|s| s.tokens.iter().cloned())
        .collect()
}
