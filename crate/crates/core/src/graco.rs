//! Cohesion-graph metric over AMR-aligned concept tokens.
//!
//! Each side's aligned concepts become nodes carrying word vectors; edge
//! weights are cosines. The connectivity of a graph is its mean edge weight
//! and the score of a pair is `1 - |cs_A - cs_B|`.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::amr::{split_sense, AmrGraph};
use crate::embeddings::{
    cosine, ContextualEmbeddingStore, EmbeddingError, Provenance, Side, StaticEmbeddingTable,
    TokenVector,
};
use crate::lemma::Lemmatizer;
use crate::score::MetricScore;

/// Shortest shared prefix accepted by the fallback alignment pass.
pub const MIN_PREFIX: usize = 4;

#[derive(Debug, Error)]
pub enum GracoError {
    #[error("alignment file {path}: line {line}: {message}")]
    AlignmentFormat {
        path: String,
        line: usize,
        message: String,
    },
    #[error("cannot read alignment file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("case {case_id} side {side}: {message}")]
    BadAlignment {
        case_id: String,
        side: Side,
        message: String,
    },
    #[error("reduced cohesion graph requested without a differing set")]
    MissingDiffering,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Concept variables linked to half-open token spans `[start, end)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConceptAlignment {
    pub links: Vec<(String, (usize, usize))>,
    pub unaligned_concepts: Vec<String>,
}

impl ConceptAlignment {
    pub fn span_of(&self, variable: &str) -> Option<(usize, usize)> {
        self.links
            .iter()
            .find(|(v, _)| v == variable)
            .map(|(_, s)| *s)
    }
}

/// One external link: token span plus a JAMR node address such as `0.1.0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalLink {
    pub span: (usize, usize),
    pub node_path: String,
}

/// Alignments read from lines `caseid side start-end|path start-end|path ...`.
#[derive(Debug, Clone, Default)]
pub struct ExternalAlignments {
    entries: HashMap<(String, Side), Vec<ExternalLink>>,
}

impl ExternalAlignments {
    pub fn from_reader<R: BufRead>(reader: R, path: &str) -> Result<Self, GracoError> {
        let mut out = ExternalAlignments::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| GracoError::Io {
                path: path.to_string(),
                source,
            })?;
            let err = |message: String| GracoError::AlignmentFormat {
                path: path.to_string(),
                line: idx + 1,
                message,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let case_id = fields.next().ok_or_else(|| err("missing case id".into()))?;
            let side: Side = fields
                .next()
                .ok_or_else(|| err("missing side".into()))?
                .parse()
                .map_err(|_| err("side must be A or B".into()))?;
            let mut links = Vec::new();
            for item in fields {
                let (span, node) = item
                    .split_once('|')
                    .ok_or_else(|| err(format!("expected `start-end|node`, got `{item}`")))?;
                let (s, e) = span
                    .split_once('-')
                    .ok_or_else(|| err(format!("bad span `{span}`")))?;
                let (s, e): (usize, usize) = match (s.parse(), e.parse()) {
                    (Ok(s), Ok(e)) if s < e => (s, e),
                    _ => return Err(err(format!("bad span `{span}`"))),
                };
                let valid_path =
                    !node.is_empty() && node.split('.').all(|p| p.parse::<usize>().is_ok());
                if !valid_path {
                    return Err(err(format!("bad node address `{node}`")));
                }
                links.push(ExternalLink {
                    span: (s, e),
                    node_path: node.to_string(),
                });
            }
            out.entries.insert((case_id.to_string(), side), links);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GracoError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| GracoError::Io {
            path: display.clone(),
            source,
        })?;
        Self::from_reader(BufReader::new(file), &display)
    }

    pub fn get(&self, case_id: &str, side: Side) -> Option<&[ExternalLink]> {
        self.entries
            .get(&(case_id.to_string(), side))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Lemma candidates per token: an explicit lemma when supplied, otherwise the
/// lemmatizer's candidates. The surface form is always included.
pub fn token_lemmas(
    tokens: &[String],
    explicit: Option<&[String]>,
    lemmatizer: &dyn Lemmatizer,
) -> Vec<Vec<String>> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut c = match explicit.and_then(|l| l.get(i)) {
                Some(l) => vec![l.to_lowercase()],
                None => lemmatizer.candidates(t),
            };
            let lower = t.to_lowercase();
            if !c.contains(&lower) {
                c.push(lower);
            }
            c
        })
        .collect()
}

fn common_prefix(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// Span starting at `start` whose lemmas spell the hyphen-separated parts of
/// `lemma`, e.g. `pull-up` over tokens `pulling up`.
fn match_at(
    lemma: &str,
    start: usize,
    lemmas: &[Vec<String>],
    used: &[bool],
) -> Option<(usize, usize)> {
    let parts: Vec<&str> = lemma.split('-').filter(|p| !p.is_empty()).collect();
    if parts.is_empty() || start + parts.len() > lemmas.len() {
        return None;
    }
    let fits = parts.iter().enumerate().all(|(k, part)| {
        let i = start + k;
        !used[i] && lemmas[i].iter().any(|c| c == part)
    });
    if fits {
        return Some((start, start + parts.len()));
    }
    if parts.len() > 1 && !used[start] && lemmas[start].iter().any(|c| c == lemma) {
        return Some((start, start + 1));
    }
    None
}

/// Links concepts to sentence tokens. External links win for every concept
/// they mention; the rest are aligned greedily left to right, first by exact
/// lemma, then by a shared prefix of at least [`MIN_PREFIX`] characters.
pub fn align_concepts(
    lemmas: &[Vec<String>],
    g: &AmrGraph,
    external: Option<&[ExternalLink]>,
) -> Result<ConceptAlignment, String> {
    let n = lemmas.len();
    let mut used = vec![false; n];
    let mut links: HashMap<String, (usize, usize)> = HashMap::new();

    if let Some(external) = external {
        let by_path: HashMap<String, String> =
            g.node_paths().into_iter().map(|(v, p)| (p, v)).collect();
        for link in external {
            let var = by_path
                .get(&link.node_path)
                .ok_or_else(|| format!("no node at address {}", link.node_path))?;
            if link.span.1 > n {
                return Err(format!(
                    "span {}-{} outside sentence of {n} tokens",
                    link.span.0, link.span.1
                ));
            }
            if links.insert(var.clone(), link.span).is_some() {
                return Err(format!("node {} aligned twice", link.node_path));
            }
            used[link.span.0..link.span.1]
                .iter_mut()
                .for_each(|u| *u = true);
        }
    }

    let concepts: Vec<(String, String)> = g
        .concept_nodes()
        .into_iter()
        .filter(|c| !links.contains_key(&c.variable))
        .map(|c| (c.variable, c.lemma.to_lowercase()))
        .collect();

    for (var, lemma) in &concepts {
        if let Some(span) = (0..n).find_map(|i| match_at(lemma, i, lemmas, &used)) {
            used[span.0..span.1].iter_mut().for_each(|u| *u = true);
            links.insert(var.clone(), span);
        }
    }
    for (var, lemma) in &concepts {
        if links.contains_key(var) || lemma.chars().count() < MIN_PREFIX {
            continue;
        }
        let hit = (0..n).find(|&i| {
            !used[i]
                && lemmas[i]
                    .iter()
                    .any(|c| common_prefix(c, lemma) >= MIN_PREFIX)
        });
        if let Some(i) = hit {
            used[i] = true;
            links.insert(var.clone(), (i, i + 1));
        }
    }

    let mut alignment = ConceptAlignment::default();
    for inst in g.instances() {
        match links.get(&inst.variable) {
            Some(span) => alignment.links.push((inst.variable.clone(), *span)),
            None => alignment.unaligned_concepts.push(inst.variable.clone()),
        }
    }
    Ok(alignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CohesionMode {
    Full,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohesionNode {
    pub variable: String,
    pub vector: TokenVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohesionGraph {
    pub nodes: Vec<CohesionNode>,
    pub edges: Vec<(usize, usize, f64)>,
    pub mode: CohesionMode,
}

/// Full mode links every node pair; reduced mode keeps only edges with at
/// least one endpoint in `differing`.
pub fn build_cohesion_graph(
    nodes: Vec<CohesionNode>,
    mode: CohesionMode,
    differing: Option<&HashSet<String>>,
) -> Result<CohesionGraph, GracoError> {
    let differing = match (mode, differing) {
        (CohesionMode::Reduced, None) => return Err(GracoError::MissingDiffering),
        (_, d) => d,
    };
    let keep = |i: usize, j: usize| match mode {
        CohesionMode::Full => true,
        CohesionMode::Reduced => {
            let d = differing.expect("checked above");
            d.contains(&nodes[i].variable) || d.contains(&nodes[j].variable)
        }
    };
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if keep(i, j) {
                edges.push((
                    i,
                    j,
                    cosine(&nodes[i].vector.vector, &nodes[j].vector.vector)?,
                ));
            }
        }
    }
    Ok(CohesionGraph { nodes, edges, mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectivityScore {
    pub value: f64,
    pub edge_count: usize,
}

/// Mean edge weight; 1 for a graph without edges.
pub fn connectivity(g: &CohesionGraph) -> ConnectivityScore {
    if g.edges.is_empty() {
        if g.mode == CohesionMode::Full {
            log::warn!(
                "full cohesion graph with {} node(s) has no edges; connectivity set to 1",
                g.nodes.len()
            );
        }
        return ConnectivityScore {
            value: 1.0,
            edge_count: 0,
        };
    }
    let sum: f64 = g.edges.iter().map(|e| e.2).sum();
    ConnectivityScore {
        value: sum / g.edges.len() as f64,
        edge_count: g.edges.len(),
    }
}

/// Variables on each side whose concept lemma occurs a different number of
/// times in the two graphs.
pub fn differing_variables(a: &AmrGraph, b: &AmrGraph) -> (HashSet<String>, HashSet<String>) {
    let counts = |g: &AmrGraph| {
        let mut m: HashMap<String, usize> = HashMap::new();
        for c in g.concept_nodes() {
            *m.entry(c.lemma).or_insert(0) += 1;
        }
        m
    };
    let (ca, cb) = (counts(a), counts(b));
    let pick = |g: &AmrGraph, own: &HashMap<String, usize>, other: &HashMap<String, usize>| {
        g.concept_nodes()
            .into_iter()
            .filter(|c| own.get(&c.lemma) != other.get(&c.lemma))
            .map(|c| c.variable)
            .collect()
    };
    (pick(a, &ca, &cb), pick(b, &cb, &ca))
}

#[derive(Debug, Clone, Copy)]
pub enum VectorSource<'r> {
    Static(&'r StaticEmbeddingTable),
    Contextual(&'r ContextualEmbeddingStore),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GracoVariant {
    pub contextual: bool,
    pub mode: CohesionMode,
}

impl GracoVariant {
    pub const ALL: [GracoVariant; 4] = [
        GracoVariant {
            contextual: false,
            mode: CohesionMode::Full,
        },
        GracoVariant {
            contextual: false,
            mode: CohesionMode::Reduced,
        },
        GracoVariant {
            contextual: true,
            mode: CohesionMode::Full,
        },
        GracoVariant {
            contextual: true,
            mode: CohesionMode::Reduced,
        },
    ];

    pub fn metric_id(self) -> &'static str {
        match (self.contextual, self.mode) {
            (false, CohesionMode::Full) => "graco_glo",
            (false, CohesionMode::Reduced) => "graco_glo_red",
            (true, CohesionMode::Full) => "graco",
            (true, CohesionMode::Reduced) => "graco_red",
        }
    }

    pub fn from_metric_id(id: &str) -> Option<GracoVariant> {
        Self::ALL.into_iter().find(|v| v.metric_id() == id)
    }
}

/// One side of a pair as seen by the metric.
#[derive(Debug, Clone, Copy)]
pub struct GracoSide<'a> {
    pub tokens: &'a [String],
    pub lemmas: Option<&'a [String]>,
    pub amr: &'a AmrGraph,
}

pub struct GracoResources<'r> {
    pub vectors: VectorSource<'r>,
    pub alignments: Option<&'r ExternalAlignments>,
    pub lemmatizer: &'r dyn Lemmatizer,
}

fn mean_vector(parts: &[TokenVector], dim: usize, token: String, lemma: String) -> TokenVector {
    let mut vector = vec![0.0; dim];
    for p in parts {
        for (acc, x) in vector.iter_mut().zip(&p.vector) {
            *acc += x;
        }
    }
    if !parts.is_empty() {
        vector.iter_mut().for_each(|x| *x /= parts.len() as f64);
    }
    let provenance = if vector.iter().all(|&x| x == 0.0) {
        Provenance::OovZero
    } else if parts.iter().all(|p| p.provenance == Provenance::Exact) {
        Provenance::Exact
    } else {
        Provenance::LemmaFallback
    };
    TokenVector {
        token,
        lemma,
        vector,
        provenance,
    }
}

/// Aligned concept nodes of one side with their vectors.
pub fn side_nodes(
    case_id: &str,
    side: Side,
    input: GracoSide,
    resources: &GracoResources,
) -> Result<Vec<CohesionNode>, GracoError> {
    let bad = |message: String| GracoError::BadAlignment {
        case_id: case_id.to_string(),
        side,
        message,
    };
    let (tokens, explicit, vectors) = match resources.vectors {
        VectorSource::Static(_) => (input.tokens.to_vec(), input.lemmas, None::<&[Vec<f64>]>),
        VectorSource::Contextual(store) => {
            let s = store.sentence(case_id, side)?;
            // The store fixes its own tokenization; explicit lemmas only
            // apply when it matches the suite's.
            let explicit = input.lemmas.filter(|l| l.len() == s.tokens.len());
            (s.tokens.clone(), explicit, Some(s.vectors.as_slice()))
        }
    };
    let lemmas = token_lemmas(&tokens, explicit, resources.lemmatizer);
    let external = resources.alignments.and_then(|a| a.get(case_id, side));
    let alignment = align_concepts(&lemmas, input.amr, external).map_err(bad)?;

    let mut nodes = Vec::with_capacity(alignment.links.len());
    for (var, (s, e)) in &alignment.links {
        let concept = input.amr.concept_of(var).unwrap_or_default();
        let lemma = split_sense(concept).0.to_string();
        let parts: Vec<TokenVector> = (*s..*e)
            .map(|i| match (resources.vectors, vectors) {
                (VectorSource::Static(table), _) => table.lookup(&tokens[i], &lemmas[i][0]),
                (_, Some(vs)) => {
                    let v = vs[i].clone();
                    let provenance = if v.iter().all(|&x| x == 0.0) {
                        Provenance::OovZero
                    } else {
                        Provenance::Exact
                    };
                    TokenVector {
                        token: tokens[i].clone(),
                        lemma: lemmas[i][0].clone(),
                        vector: v,
                        provenance,
                    }
                }
                (VectorSource::Contextual(_), None) => unreachable!(),
            })
            .collect();
        let dim = match resources.vectors {
            VectorSource::Static(t) => t.dimension(),
            VectorSource::Contextual(c) => c.dimension(),
        };
        let vector = if parts.len() == 1 {
            parts.into_iter().next().expect("one part")
        } else {
            mean_vector(&parts, dim, tokens[*s..*e].join(" "), lemma)
        };
        nodes.push(CohesionNode {
            variable: var.clone(),
            vector,
        });
    }
    Ok(nodes)
}

/// `1 - |cs_A - cs_B|` for one sentence pair.
pub fn graco_score(
    case_id: &str,
    a: GracoSide,
    b: GracoSide,
    variant: GracoVariant,
    resources: &GracoResources,
) -> Result<MetricScore, GracoError> {
    let (diff_a, diff_b) = differing_variables(a.amr, b.amr);
    let (da, db) = match variant.mode {
        CohesionMode::Full => (None, None),
        CohesionMode::Reduced => (Some(&diff_a), Some(&diff_b)),
    };
    let ga = build_cohesion_graph(
        side_nodes(case_id, Side::A, a, resources)?,
        variant.mode,
        da,
    )?;
    let gb = build_cohesion_graph(
        side_nodes(case_id, Side::B, b, resources)?,
        variant.mode,
        db,
    )?;
    let (ca, cb) = (connectivity(&ga), connectivity(&gb));
    if ca.edge_count == 0 && cb.edge_count == 0 && variant.mode == CohesionMode::Full {
        log::warn!("case {case_id}: both cohesion graphs are empty; score 1");
    }
    Ok(
        MetricScore::new(variant.metric_id(), 1.0 - (ca.value - cb.value).abs())
            .with("cs_a", ca.value)
            .with("cs_b", cb.value)
            .with("edges_a", ca.edge_count as f64)
            .with("edges_b", cb.edge_count as f64),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;
    use crate::lemma::RuleLemmatizer;
    use crate::text::tokenize;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn lemmas(s: &str) -> Vec<Vec<String>> {
        token_lemmas(&toks(s), None, &RuleLemmatizer)
    }

    #[test]
    fn heuristic_alignment_boy_child() {
        let g = parse_penman("(xv0 / hit-01 :ARG0 (xv2 / boy) :ARG1 (xv1 / baseball))").unwrap();
        let al = align_concepts(&lemmas("A boy is hitting a baseball"), &g, None).unwrap();
        assert_eq!(al.span_of("xv0"), Some((3, 4)));
        assert_eq!(al.span_of("xv2"), Some((1, 2)));
        assert_eq!(al.span_of("xv1"), Some((5, 6)));
        assert!(al.unaligned_concepts.is_empty());
    }

    #[test]
    fn unmatched_concept_is_reported() {
        let g = parse_penman("(p / person :ARG0-of (r / run-01))").unwrap();
        let al = align_concepts(&lemmas("Someone is running"), &g, None).unwrap();
        assert_eq!(al.unaligned_concepts, vec!["p".to_string()]);
        assert_eq!(al.span_of("r"), Some((2, 3)));
    }

    #[test]
    fn prefix_and_hyphenated_alignment() {
        let g = parse_penman("(p / pull-up-07 :ARG0 (c / child) :ARG1 (j / jeep-01))").unwrap();
        let al = align_concepts(&lemmas("The child is pulling up the jeeps"), &g, None).unwrap();
        assert_eq!(al.span_of("p"), Some((3, 5)));
        assert_eq!(al.span_of("j"), Some((6, 7)));
        let g = parse_penman("(d / domesticate-01)").unwrap();
        let al = align_concepts(&lemmas("domestic animals"), &g, None).unwrap();
        assert_eq!(al.span_of("d"), Some((0, 1)));
    }

    #[test]
    fn external_alignment_takes_precedence() {
        let g = parse_penman("(xv0 / hit-01 :ARG0 (xv2 / boy) :ARG1 (xv1 / baseball))").unwrap();
        let ext =
            ExternalAlignments::from_reader(std::io::Cursor::new("c1 A 0-2|0.0\n"), "mem").unwrap();
        let al = align_concepts(
            &lemmas("A boy is hitting a baseball"),
            &g,
            ext.get("c1", Side::A),
        )
        .unwrap();
        assert_eq!(al.span_of("xv2"), Some((0, 2)));
        assert_eq!(al.span_of("xv0"), Some((3, 4)));
        assert!(
            ExternalAlignments::from_reader(std::io::Cursor::new("c1 A 0-2\n"), "mem").is_err()
        );
        assert!(
            ExternalAlignments::from_reader(std::io::Cursor::new("c1 C 0-2|0\n"), "mem").is_err()
        );
        let far =
            ExternalAlignments::from_reader(std::io::Cursor::new("c1 A 5-9|0\n"), "mem").unwrap();
        assert!(align_concepts(&lemmas("A boy"), &g, far.get("c1", Side::A)).is_err());
    }

    fn node(var: &str, v: Vec<f64>) -> CohesionNode {
        CohesionNode {
            variable: var.into(),
            vector: TokenVector {
                token: var.into(),
                lemma: var.into(),
                vector: v,
                provenance: Provenance::Exact,
            },
        }
    }

    #[test]
    fn full_and_reduced_edge_sets() {
        let nodes: Vec<_> = (0..5)
            .map(|i| node(&format!("n{i}"), vec![1.0, i as f64]))
            .collect();
        let full = build_cohesion_graph(nodes.clone(), CohesionMode::Full, None).unwrap();
        assert_eq!(full.edges.len(), 10);
        let d: HashSet<String> = ["n2".to_string()].into();
        let red = build_cohesion_graph(nodes.clone(), CohesionMode::Reduced, Some(&d)).unwrap();
        assert_eq!(red.edges.len(), 4);
        assert!(red.edges.iter().all(|&(i, j, _)| i == 2 || j == 2));
        let absent: HashSet<String> = ["zz".to_string()].into();
        let empty =
            build_cohesion_graph(nodes.clone(), CohesionMode::Reduced, Some(&absent)).unwrap();
        assert_eq!(
            connectivity(&empty),
            ConnectivityScore {
                value: 1.0,
                edge_count: 0
            }
        );
        assert!(matches!(
            build_cohesion_graph(nodes, CohesionMode::Reduced, None),
            Err(GracoError::MissingDiffering)
        ));
    }

    #[test]
    fn connectivity_values() {
        let same = build_cohesion_graph(
            vec![node("a", vec![1.0, 2.0]), node("b", vec![2.0, 4.0])],
            CohesionMode::Full,
            None,
        )
        .unwrap();
        assert!((connectivity(&same).value - 1.0).abs() < 1e-12);
        let oov = build_cohesion_graph(
            vec![node("a", vec![1.0, 2.0]), node("b", vec![0.0, 0.0])],
            CohesionMode::Full,
            None,
        )
        .unwrap();
        assert_eq!(
            connectivity(&oov),
            ConnectivityScore {
                value: 0.0,
                edge_count: 1
            }
        );
        let lone = build_cohesion_graph(vec![node("a", vec![1.0, 0.0])], CohesionMode::Full, None)
            .unwrap();
        assert_eq!(connectivity(&lone).value, 1.0);
    }

    #[test]
    fn differing_uses_lemma_multisets() {
        let a = parse_penman("(w / walk-01 :ARG0 (x / woman) :ARG1 (d / dog))").unwrap();
        let b = parse_penman("(w / walk-02 :ARG0 (x / woman) :ARG1 (c / cat))").unwrap();
        let (da, db) = differing_variables(&a, &b);
        assert_eq!(da, HashSet::from(["d".to_string()]));
        assert_eq!(db, HashSet::from(["c".to_string()]));
    }

    #[test]
    fn variant_ids_round_trip() {
        for v in GracoVariant::ALL {
            assert_eq!(GracoVariant::from_metric_id(v.metric_id()), Some(v));
        }
        assert_eq!(GracoVariant::from_metric_id("bleu"), None);
    }
}
