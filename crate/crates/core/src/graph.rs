//! Graph-based similarity between AMRs: Smatch (hill-climbing and
//! exhaustive), S²match, the Weisfeiler-Leman kernel and its Wasserstein
//! variant.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amr::{split_sense, AmrGraph, TOP_ROLE, TOP_VALUE};
use crate::embeddings::{cosine, StaticEmbeddingTable};

/// Largest graph (in variables) the exhaustive search accepts.
pub const EXHAUSTIVE_LIMIT: usize = 8;

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphMetricError {
    #[error("exhaustive matching supports at most {limit} variables per graph, got {found}")]
    TooLarge { found: usize, limit: usize },
}

/// Partial injective map from variables of the first graph to variables of
/// the second.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VariableMapping {
    pub pairs: Vec<(String, String)>,
}

impl VariableMapping {
    pub fn get(&self, a: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(x, _)| x == a)
            .map(|(_, y)| y.as_str())
    }

    pub fn inverse(&self) -> VariableMapping {
        VariableMapping {
            pairs: self
                .pairs
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub matched_weight: f64,
    pub triples_a: usize,
    pub triples_b: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mapping: VariableMapping,
}

impl MatchResult {
    /// Precision is relative to the second graph (the candidate), recall to
    /// the first (the reference).
    fn new(
        matched_weight: f64,
        triples_a: usize,
        triples_b: usize,
        mapping: VariableMapping,
    ) -> Self {
        let ratio = |n: usize| {
            if n > 0 {
                matched_weight / n as f64
            } else {
                0.0
            }
        };
        let total = triples_a + triples_b;
        MatchResult {
            matched_weight,
            triples_a,
            triples_b,
            precision: ratio(triples_b),
            recall: ratio(triples_a),
            f1: if total > 0 {
                2.0 * matched_weight / total as f64
            } else {
                0.0
            },
            mapping,
        }
    }

    fn swapped(self) -> MatchResult {
        MatchResult {
            matched_weight: self.matched_weight,
            triples_a: self.triples_b,
            triples_b: self.triples_a,
            precision: self.recall,
            recall: self.precision,
            f1: self.f1,
            mapping: self.mapping.inverse(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmatchConfig {
    /// Total number of starts: one smart initialization plus random ones.
    pub restarts: usize,
    pub seed: u64,
    pub include_root: bool,
    pub canonicalize: bool,
}

impl Default for SmatchConfig {
    fn default() -> Self {
        SmatchConfig {
            restarts: 4,
            seed: 0,
            include_root: true,
            canonicalize: true,
        }
    }
}

/// Similarity between two concept lemmas, used by S²match.
pub trait LemmaSimilarity: Sync {
    fn similarity(&self, a: &str, b: &str) -> f64;
}

impl LemmaSimilarity for StaticEmbeddingTable {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        match (self.get(a), self.get(b)) {
            (Some(u), Some(v)) => cosine(u, v).unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

impl<F: Fn(&str, &str) -> f64 + Sync> LemmaSimilarity for F {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        self(a, b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct S2matchConfig {
    pub smatch: SmatchConfig,
    pub cutoff: f64,
    pub sense_coeff: f64,
}

impl Default for S2matchConfig {
    fn default() -> Self {
        S2matchConfig {
            smatch: SmatchConfig::default(),
            cutoff: 0.9,
            sense_coeff: 0.95,
        }
    }
}

// ---------------------------------------------------------------------------
// Matching engine

struct Side<'g> {
    vars: Vec<&'g str>,
    concepts: Vec<&'g str>,
    attrs: Vec<Vec<(&'g str, &'g str)>>,
    rels: Vec<(usize, &'g str, usize)>,
    triples: usize,
}

impl<'g> Side<'g> {
    fn new(g: &'g AmrGraph, include_root: bool) -> Self {
        let vars: Vec<&str> = g.instances().iter().map(|i| i.variable.as_str()).collect();
        let concepts = g.instances().iter().map(|i| i.concept.as_str()).collect();
        let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut attrs = vec![Vec::new(); vars.len()];
        let mut seen = HashSet::new();
        if include_root {
            attrs[index[g.root()]].push((TOP_ROLE, TOP_VALUE));
        }
        for a in g.attributes() {
            let i = index[a.source.as_str()];
            if seen.insert((i, a.role.as_str(), a.value.as_str())) {
                attrs[i].push((a.role.as_str(), a.value.as_str()));
            }
        }
        let mut rels = Vec::new();
        let mut seen = HashSet::new();
        for r in g.relations() {
            let t = (
                index[r.source.as_str()],
                r.role.as_str(),
                index[r.target.as_str()],
            );
            if seen.insert(t) {
                rels.push(t);
            }
        }
        let triples = vars.len() + attrs.iter().map(Vec::len).sum::<usize>() + rels.len();
        Side {
            vars,
            concepts,
            attrs,
            rels,
            triples,
        }
    }
}

/// Precomputed weights for mapping the variables of `a` onto those of `b`.
struct Engine {
    n: usize,
    m: usize,
    instance: Vec<Vec<f64>>,
    attribute: Vec<Vec<u32>>,
    unary: Vec<Vec<f64>>,
    a_rels: Vec<(usize, u32, usize)>,
    rels_of: Vec<Vec<usize>>,
    b_rels: HashSet<(usize, u32, usize)>,
}

type Mapping = Vec<Option<usize>>;

impl Engine {
    fn build(a: &Side, b: &Side, concept_weight: &dyn Fn(&str, &str) -> f64) -> Engine {
        let (n, m) = (a.vars.len(), b.vars.len());
        let mut instance = vec![vec![0.0; m]; n];
        let mut attribute = vec![vec![0u32; m]; n];
        let mut unary = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in 0..m {
                instance[i][j] = concept_weight(a.concepts[i], b.concepts[j]);
                attribute[i][j] =
                    a.attrs[i].iter().filter(|x| b.attrs[j].contains(x)).count() as u32;
                unary[i][j] = instance[i][j] + attribute[i][j] as f64;
            }
        }
        let mut roles: HashMap<&str, u32> = HashMap::new();
        let mut role_id = |r| {
            let next = roles.len() as u32;
            *roles.entry(r).or_insert(next)
        };
        let a_rels: Vec<_> = a.rels.iter().map(|&(s, r, t)| (s, role_id(r), t)).collect();
        let b_rels = b.rels.iter().map(|&(s, r, t)| (s, role_id(r), t)).collect();
        let mut rels_of = vec![Vec::new(); n];
        for (k, &(s, _, t)) in a_rels.iter().enumerate() {
            rels_of[s].push(k);
            if t != s {
                rels_of[t].push(k);
            }
        }
        Engine {
            n,
            m,
            instance,
            attribute,
            unary,
            a_rels,
            rels_of,
            b_rels,
        }
    }

    fn transposed(&self, a: &Side, b: &Side, concept_weight: &dyn Fn(&str, &str) -> f64) -> Engine {
        Engine::build(b, a, &|x, y| concept_weight(y, x))
    }

    fn rel_hit(&self, k: usize, map: &Mapping) -> bool {
        let (s, r, t) = self.a_rels[k];
        match (map[s], map[t]) {
            (Some(x), Some(y)) => self.b_rels.contains(&(x, r, y)),
            _ => false,
        }
    }

    fn total(&self, map: &Mapping) -> f64 {
        let unary: f64 = (0..self.n)
            .filter_map(|i| map[i].map(|j| self.unary[i][j]))
            .sum();
        let rels = (0..self.a_rels.len())
            .filter(|&k| self.rel_hit(k, map))
            .count();
        unary + rels as f64
    }

    /// Score restricted to terms that involve any variable in `vars`.
    fn local(&self, vars: &[usize], map: &Mapping) -> f64 {
        let mut score = 0.0;
        let mut counted: Vec<usize> = Vec::new();
        for &i in vars {
            if let Some(j) = map[i] {
                score += self.unary[i][j];
            }
            for &k in &self.rels_of[i] {
                if !counted.contains(&k) {
                    counted.push(k);
                    if self.rel_hit(k, map) {
                        score += 1.0;
                    }
                }
            }
        }
        score
    }

    /// Order-independent matched weight: individual contributions summed in
    /// ascending order.
    fn exact_weight(&self, map: &Mapping) -> f64 {
        let mut parts = Vec::new();
        for (i, j) in map.iter().enumerate() {
            if let Some(j) = *j {
                if self.instance[i][j] > 0.0 {
                    parts.push(self.instance[i][j]);
                }
                parts.extend(std::iter::repeat_n(1.0, self.attribute[i][j] as usize));
            }
        }
        parts.extend(
            (0..self.a_rels.len())
                .filter(|&k| self.rel_hit(k, map))
                .map(|_| 1.0),
        );
        parts.sort_by(f64::total_cmp);
        parts.iter().sum()
    }

    fn smart_init(&self) -> Mapping {
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..self.n {
            for j in 0..self.m {
                if self.unary[i][j] > 0.0 {
                    cands.push((self.unary[i][j], i, j));
                }
            }
        }
        cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut map = vec![None; self.n];
        let mut used = vec![false; self.m];
        for (_, i, j) in cands {
            if map[i].is_none() && !used[j] {
                map[i] = Some(j);
                used[j] = true;
            }
        }
        map
    }

    fn random_init(&self, rng: &mut ChaCha8Rng) -> Mapping {
        let mut slots: Vec<Option<usize>> = (0..self.m).map(Some).collect();
        slots.extend(std::iter::repeat_n(None, self.n.saturating_sub(self.m)));
        slots.shuffle(rng);
        slots.truncate(self.n);
        slots
    }

    /// Steepest-ascent hill climbing over reassignment and swap moves.
    fn climb(&self, mut map: Mapping) -> Mapping {
        loop {
            let mut used = vec![false; self.m];
            for j in map.iter().flatten() {
                used[*j] = true;
            }
            let mut best: Option<(f64, Mapping)> = None;
            let mut consider = |gain: f64, next: Mapping| {
                if gain > GAIN_EPS && best.as_ref().is_none_or(|(g, _)| gain > *g + GAIN_EPS) {
                    best = Some((gain, next));
                }
            };
            for i in 0..self.n {
                let before = self.local(&[i], &map);
                for j in (0..self.m).filter(|&j| !used[j]) {
                    let mut next = map.clone();
                    next[i] = Some(j);
                    consider(self.local(&[i], &next) - before, next);
                }
            }
            for i in 0..self.n {
                for k in i + 1..self.n {
                    if map[i] == map[k] {
                        continue;
                    }
                    let before = self.local(&[i, k], &map);
                    let mut next = map.clone();
                    next.swap(i, k);
                    consider(self.local(&[i, k], &next) - before, next);
                }
            }
            match best {
                Some((_, next)) => map = next,
                None => return map,
            }
        }
    }

    fn search(&self, restarts: usize, seed: u64) -> Mapping {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = self.climb(self.smart_init());
        let mut best_score = self.total(&best);
        for _ in 1..restarts.max(1) {
            let map = self.climb(self.random_init(&mut rng));
            let score = self.total(&map);
            if score > best_score + GAIN_EPS {
                best = map;
                best_score = score;
            }
        }
        best
    }

    fn exhaustive(&self) -> Mapping {
        debug_assert!(self.n <= self.m);
        let mut map = vec![None; self.n];
        let mut used = vec![false; self.m];
        let mut best = (f64::NEG_INFINITY, map.clone());
        self.enumerate(0, &mut map, &mut used, &mut best);
        best.1
    }

    fn enumerate(&self, i: usize, map: &mut Mapping, used: &mut [bool], best: &mut (f64, Mapping)) {
        if i == self.n {
            let score = self.exact_weight(map);
            if score > best.0 {
                *best = (score, map.clone());
            }
            return;
        }
        for j in 0..self.m {
            if !used[j] {
                used[j] = true;
                map[i] = Some(j);
                self.enumerate(i + 1, map, used, best);
                map[i] = None;
                used[j] = false;
            }
        }
    }
}

fn to_mapping(map: &Mapping, a: &Side, b: &Side) -> VariableMapping {
    VariableMapping {
        pairs: map
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (a.vars[i].to_string(), b.vars[j].to_string())))
            .collect(),
    }
}

fn invert(map: &Mapping, m: usize) -> Mapping {
    let mut out = vec![None; m];
    for (i, j) in map.iter().enumerate() {
        if let Some(j) = *j {
            out[j] = Some(i);
        }
    }
    out
}

fn prepared(g: &AmrGraph, canonicalize: bool) -> std::borrow::Cow<'_, AmrGraph> {
    if canonicalize {
        std::borrow::Cow::Owned(g.canonicalized())
    } else {
        std::borrow::Cow::Borrowed(g)
    }
}

fn binary_concepts(a: &str, b: &str) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// A mapping found in one orientation, expressed as A→B.
struct Candidate {
    weight: f64,
    forward: Mapping,
}

fn best_candidate(candidates: Vec<Candidate>) -> Candidate {
    let mut it = candidates.into_iter();
    let mut best = it.next().expect("at least one candidate");
    for c in it {
        if c.weight > best.weight {
            best = c;
        }
    }
    best
}

/// Hill-climbs in both argument orders with the same seed and keeps the
/// better mapping, so that `smatch(a, b) == smatch(b, a)`.
fn oriented_searches(fwd: &Engine, rev: &Engine, restarts: usize, seed: u64) -> (Mapping, Mapping) {
    let f = fwd.search(restarts, seed);
    let r = rev.search(restarts, seed);
    (f, r)
}

pub fn smatch(a: &AmrGraph, b: &AmrGraph, config: SmatchConfig) -> MatchResult {
    let (ga, gb) = (
        prepared(a, config.canonicalize),
        prepared(b, config.canonicalize),
    );
    let (sa, sb) = (
        Side::new(&ga, config.include_root),
        Side::new(&gb, config.include_root),
    );
    let fwd = Engine::build(&sa, &sb, &binary_concepts);
    let rev = fwd.transposed(&sa, &sb, &binary_concepts);
    let (f, r) = oriented_searches(&fwd, &rev, config.restarts, config.seed);
    let r_fwd = invert(&r, fwd.n);
    let best = best_candidate(vec![
        Candidate {
            weight: fwd.exact_weight(&f),
            forward: f,
        },
        Candidate {
            weight: fwd.exact_weight(&r_fwd),
            forward: r_fwd,
        },
    ]);
    MatchResult::new(
        best.weight,
        sa.triples,
        sb.triples,
        to_mapping(&best.forward, &sa, &sb),
    )
}

/// Global optimum over all injective mappings; exponential, for testing.
pub fn smatch_exhaustive(
    a: &AmrGraph,
    b: &AmrGraph,
    config: SmatchConfig,
) -> Result<MatchResult, GraphMetricError> {
    let found = a.variable_count().max(b.variable_count());
    if found > EXHAUSTIVE_LIMIT {
        return Err(GraphMetricError::TooLarge {
            found,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let (ga, gb) = (
        prepared(a, config.canonicalize),
        prepared(b, config.canonicalize),
    );
    let (sa, sb) = (
        Side::new(&ga, config.include_root),
        Side::new(&gb, config.include_root),
    );
    if sa.vars.len() <= sb.vars.len() {
        let e = Engine::build(&sa, &sb, &binary_concepts);
        let map = e.exhaustive();
        Ok(MatchResult::new(
            e.exact_weight(&map),
            sa.triples,
            sb.triples,
            to_mapping(&map, &sa, &sb),
        ))
    } else {
        Ok(smatch_exhaustive(b, a, config)?.swapped())
    }
}

/// Weight of matching concept `a` to concept `b` under S²match grading.
pub fn graded_concept_weight(
    a: &str,
    b: &str,
    sim: &dyn LemmaSimilarity,
    config: &S2matchConfig,
) -> f64 {
    if a == b {
        return 1.0;
    }
    let ((la, _), (lb, _)) = (split_sense(a), split_sense(b));
    let s = if la == lb {
        1.0
    } else {
        sim.similarity(la, lb)
    };
    if s < config.cutoff {
        0.0
    } else if la == lb {
        s * config.sense_coeff
    } else {
        s
    }
}

/// Smatch with graded credit for similar concepts. Never below the Smatch
/// matched weight: the Smatch mappings are re-climbed under graded weights
/// and compete with fresh graded searches.
pub fn s2match(
    a: &AmrGraph,
    b: &AmrGraph,
    sim: &dyn LemmaSimilarity,
    config: S2matchConfig,
) -> MatchResult {
    let sc = config.smatch;
    let (ga, gb) = (prepared(a, sc.canonicalize), prepared(b, sc.canonicalize));
    let (sa, sb) = (
        Side::new(&ga, sc.include_root),
        Side::new(&gb, sc.include_root),
    );

    let weight = |x: &str, y: &str| graded_concept_weight(x, y, sim, &config);
    let fwd = Engine::build(&sa, &sb, &weight);
    let rev = fwd.transposed(&sa, &sb, &weight);
    let bin_fwd = Engine::build(&sa, &sb, &binary_concepts);
    let bin_rev = bin_fwd.transposed(&sa, &sb, &binary_concepts);

    let (gf, gr) = oriented_searches(&fwd, &rev, sc.restarts, sc.seed);
    let (bf, br) = oriented_searches(&bin_fwd, &bin_rev, sc.restarts, sc.seed);
    let bf = fwd.climb(bf);
    let br = rev.climb(br);

    let candidates = [(gf, false), (gr, true), (bf, false), (br, true)]
        .into_iter()
        .map(|(map, reversed)| {
            let forward = if reversed { invert(&map, fwd.n) } else { map };
            Candidate {
                weight: fwd.exact_weight(&forward),
                forward,
            }
        })
        .collect();
    let best = best_candidate(candidates);
    MatchResult::new(
        best.weight,
        sa.triples,
        sb.triples,
        to_mapping(&best.forward, &sa, &sb),
    )
}

// ---------------------------------------------------------------------------
// Weisfeiler-Leman

#[derive(Debug, Clone, Copy)]
pub struct WlConfig {
    pub iterations: usize,
    pub canonicalize: bool,
}

impl Default for WlConfig {
    fn default() -> Self {
        WlConfig {
            iterations: 2,
            canonicalize: true,
        }
    }
}

/// Undirected node/edge view of an AMR: variables first (labelled by
/// concept), then one node per attribute value. The root triple is left out.
struct WlGraph {
    labels: Vec<String>,
    lemmas: Vec<Option<String>>,
    adj: Vec<Vec<(String, usize)>>,
}

impl WlGraph {
    fn new(g: &AmrGraph) -> WlGraph {
        let mut labels = Vec::new();
        let mut lemmas = Vec::new();
        let mut index = HashMap::new();
        for inst in g.instances() {
            index.insert(inst.variable.as_str(), labels.len());
            labels.push(inst.concept.clone());
            lemmas.push(Some(split_sense(&inst.concept).0.to_string()));
        }
        let mut adj = vec![Vec::new(); labels.len()];
        for a in g.attributes() {
            let node = labels.len();
            labels.push(a.value.clone());
            lemmas.push(None);
            adj.push(Vec::new());
            let s = index[a.source.as_str()];
            adj[s].push((a.role.clone(), node));
            adj[node].push((a.role.clone(), s));
        }
        for r in g.relations() {
            let (s, t) = (index[r.source.as_str()], index[r.target.as_str()]);
            adj[s].push((r.role.clone(), t));
            if s != t {
                adj[t].push((r.role.clone(), s));
            }
        }
        WlGraph {
            labels,
            lemmas,
            adj,
        }
    }
}

type Signature = (usize, Vec<(String, usize)>);

/// Label histograms over iterations 0..=K for both graphs, with labels
/// compressed through one shared dictionary.
fn wl_features(a: &WlGraph, b: &WlGraph, iterations: usize) -> [HashMap<(usize, usize), u64>; 2] {
    let mut base: HashMap<&str, usize> = HashMap::new();
    let mut current: [Vec<usize>; 2] = [a, b].map(|g| {
        g.labels
            .iter()
            .map(|l| {
                let next = base.len();
                *base.entry(l.as_str()).or_insert(next)
            })
            .collect()
    });
    let mut feats = [HashMap::new(), HashMap::new()];
    for (side, labels) in current.iter().enumerate() {
        for &l in labels {
            *feats[side].entry((0, l)).or_insert(0) += 1;
        }
    }
    for it in 1..=iterations {
        let mut dict: HashMap<Signature, usize> = HashMap::new();
        let graphs = [a, b];
        let next: [Vec<usize>; 2] = [0, 1].map(|side| {
            let g = graphs[side];
            (0..g.labels.len())
                .map(|v| {
                    let mut nb: Vec<(String, usize)> = g.adj[v]
                        .iter()
                        .map(|(role, u)| (role.clone(), current[side][*u]))
                        .collect();
                    nb.sort();
                    let sig = (current[side][v], nb);
                    let fresh = dict.len();
                    *dict.entry(sig).or_insert(fresh)
                })
                .collect()
        });
        for (side, labels) in next.iter().enumerate() {
            for &l in labels {
                *feats[side].entry((it, l)).or_insert(0) += 1;
            }
        }
        current = next;
    }
    feats
}

/// Cosine between WL label-count vectors.
pub fn wlk_similarity(a: &AmrGraph, b: &AmrGraph, config: WlConfig) -> f64 {
    let (ga, gb) = (
        prepared(a, config.canonicalize),
        prepared(b, config.canonicalize),
    );
    let [fa, fb] = wl_features(&WlGraph::new(&ga), &WlGraph::new(&gb), config.iterations);
    let dot: u64 = fa
        .iter()
        .map(|(k, x)| x * fb.get(k).copied().unwrap_or(0))
        .sum();
    let na: u64 = fa.values().map(|x| x * x).sum();
    let nb: u64 = fb.values().map(|x| x * x).sum();
    if na == 0 || nb == 0 {
        return 0.0;
    }
    (dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WwlkResult {
    pub distance: f64,
    pub similarity: f64,
}

/// Deterministic stand-in vector for a label without an embedding, with
/// components in [-1, 1].
pub fn pseudo_vector(label: &str, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    let mut counter = 0u32;
    while out.len() < dim {
        let mut h = Sha256::new();
        h.update(label.as_bytes());
        h.update(counter.to_le_bytes());
        let digest = h.finalize();
        for chunk in digest.chunks_exact(4) {
            if out.len() == dim {
                break;
            }
            let x = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            out.push(x as f64 / u32::MAX as f64 * 2.0 - 1.0);
        }
        counter += 1;
    }
    out
}

fn node_embeddings(g: &WlGraph, table: &StaticEmbeddingTable, iterations: usize) -> Vec<Vec<f64>> {
    let dim = table.dimension();
    let mut x: Vec<Vec<f64>> = g
        .labels
        .iter()
        .zip(&g.lemmas)
        .map(
            |(label, lemma)| match lemma.as_deref().and_then(|l| table.get(l)) {
                Some(v) => v.to_vec(),
                None => pseudo_vector(lemma.as_deref().unwrap_or(label), dim),
            },
        )
        .collect();
    for _ in 0..iterations {
        x = (0..x.len())
            .map(|v| {
                if g.adj[v].is_empty() {
                    return x[v].clone();
                }
                let k = g.adj[v].len() as f64;
                (0..dim)
                    .map(|d| {
                        let mean = g.adj[v].iter().map(|(_, u)| x[*u][d]).sum::<f64>() / k;
                        0.5 * x[v][d] + 0.5 * mean
                    })
                    .collect()
            })
            .collect();
    }
    x
}

fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn lex_cmp(u: &[f64], v: &[f64]) -> Ordering {
    for (a, b) in u.iter().zip(v) {
        match a.total_cmp(b) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    u.len().cmp(&v.len())
}

/// Exact Wasserstein-1 distance between uniform distributions over two
/// point sets under Euclidean cost. Inputs are put in a canonical order so
/// the result does not depend on argument or point order.
pub fn wasserstein_1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
    let mut b: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
    a.sort_by(|x, y| lex_cmp(x, y));
    b.sort_by(|x, y| lex_cmp(x, y));
    let side_cmp = a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(&b)
            .map(|(x, y)| lex_cmp(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    });
    if side_cmp == Ordering::Greater {
        std::mem::swap(&mut a, &mut b);
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| euclidean(x, y)).collect())
        .collect();
    let flows = min_cost_transport(&cost);
    let (n, m) = (a.len(), b.len());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            total += flows[i][j] as f64 * cost[i][j];
        }
    }
    total / (n * m) as f64
}

/// Integer transport plan with row sums `m` and column sums `n` that
/// minimizes total cost, by successive shortest augmenting paths.
fn min_cost_transport(cost: &[Vec<f64>]) -> Vec<Vec<i64>> {
    let n = cost.len();
    let m = cost[0].len();
    // node ids: 0 source, 1..=n rows, n+1..=n+m columns, n+m+1 sink
    let (source, sink) = (0, n + m + 1);
    let nodes = n + m + 2;
    struct Edge {
        to: usize,
        cap: i64,
        cost: f64,
    }
    let mut edges: Vec<Edge> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |from: usize, to: usize, cap: i64, c: f64, edges: &mut Vec<Edge>| {
        out[from].push(edges.len());
        edges.push(Edge { to, cap, cost: c });
        out[to].push(edges.len());
        edges.push(Edge {
            to: from,
            cap: 0,
            cost: -c,
        });
    };
    let mut arc = vec![vec![0usize; m]; n];
    for i in 0..n {
        add(source, 1 + i, m as i64, 0.0, &mut edges);
    }
    for j in 0..m {
        add(1 + n + j, sink, n as i64, 0.0, &mut edges);
    }
    for i in 0..n {
        for j in 0..m {
            arc[i][j] = edges.len();
            add(1 + i, 1 + n + j, (n * m) as i64, cost[i][j], &mut edges);
        }
    }
    let mut remaining = (n * m) as i64;
    while remaining > 0 {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &out[u] {
                    let edge = &edges[e];
                    if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            break;
        }
        let mut push = remaining;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        remaining -= push;
    }
    arc.iter()
        .map(|row| row.iter().map(|&e| edges[e ^ 1].cap).collect())
        .collect()
}

/// Wasserstein distance between WL-refined node embeddings, mapped to a
/// similarity by `1 / (1 + d)`.
pub fn wwlk_similarity(
    a: &AmrGraph,
    b: &AmrGraph,
    table: &StaticEmbeddingTable,
    config: WlConfig,
) -> WwlkResult {
    let (ga, gb) = (
        prepared(a, config.canonicalize),
        prepared(b, config.canonicalize),
    );
    let xa = node_embeddings(&WlGraph::new(&ga), table, config.iterations);
    let xb = node_embeddings(&WlGraph::new(&gb), table, config.iterations);
    let distance = wasserstein_1(&xa, &xb);
    WwlkResult {
        distance,
        similarity: 1.0 / (1.0 + distance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    const BOY_AMR: &str = "(xv0 / hit-01 :ARG0 (xv2 / boy) :ARG1 (xv1 / baseball))";
    const CHILD_AMR: &str = "(xv0 / hit-01 :ARG0 (xv2 / child) :ARG1 (xv1 / baseball))";

    fn g(s: &str) -> AmrGraph {
        parse_penman(s).unwrap()
    }

    #[test]
    fn smatch_identity_and_boy_child() {
        let a = g(BOY_AMR);
        let r = smatch(&a, &a, SmatchConfig::default());
        assert_eq!(r.f1, 1.0);
        let r = smatch(&a, &g(CHILD_AMR), SmatchConfig::default());
        assert_eq!(r.matched_weight, 5.0);
        assert_eq!((r.triples_a, r.triples_b), (6, 6));
        assert!((r.f1 - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.mapping.get("xv2"), Some("xv2"));
    }

    #[test]
    fn smatch_without_root_triple() {
        let cfg = SmatchConfig {
            include_root: false,
            ..Default::default()
        };
        let r = smatch(&g(BOY_AMR), &g(CHILD_AMR), cfg);
        assert_eq!((r.matched_weight, r.triples_a), (4.0, 5));
    }

    #[test]
    fn smatch_disjoint_two_node_graphs() {
        let a = g("(a / cat :mod (b / black))");
        let b = g("(x / dog :poss (y / man))");
        let r = smatch(&a, &b, SmatchConfig::default());
        let e = smatch_exhaustive(&a, &b, SmatchConfig::default()).unwrap();
        assert_eq!(r.matched_weight, e.matched_weight);
        // only the root triple can match
        assert_eq!(r.matched_weight, 1.0);
        assert!(r.f1 <= 2.0 / (r.triples_a + r.triples_b) as f64);
    }

    #[test]
    fn inverse_roles_match_direct_form() {
        let a = g("(b / boy :ARG0-of (h / hit-01))");
        let b = g("(h / hit-01 :ARG0 (b / boy))");
        let cfg = SmatchConfig {
            include_root: false,
            ..Default::default()
        };
        assert_eq!(smatch(&a, &b, cfg).f1, 1.0);
        let raw = SmatchConfig {
            canonicalize: false,
            ..cfg
        };
        assert!(smatch(&a, &b, raw).f1 < 1.0);
    }

    #[test]
    fn exhaustive_rejects_large_graphs() {
        let big = g("(a / x :op1 (b / x) :op2 (c / x) :op3 (d / x) :op4 (e / x) :op5 (f / x) :op6 (h / x) :op7 (i / x) :op8 (j / x))");
        assert!(matches!(
            smatch_exhaustive(&big, &big, SmatchConfig::default()),
            Err(GraphMetricError::TooLarge { found: 9, .. })
        ));
    }

    #[test]
    fn s2match_boy_child_graded() {
        let sim = |a: &str, b: &str| {
            if (a, b) == ("boy", "child") || (a, b) == ("child", "boy") {
                0.95
            } else {
                0.0
            }
        };
        let r = s2match(&g(BOY_AMR), &g(CHILD_AMR), &sim, S2matchConfig::default());
        assert!((r.matched_weight - 5.95).abs() < 1e-12);
        assert!((r.f1 - 5.95 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn s2match_sense_coefficient() {
        let none = |_: &str, _: &str| 0.0;
        let r = s2match(
            &g("(r / run-01 :ARG0 (b / boy))"),
            &g("(r / run-02 :ARG0 (b / boy))"),
            &none,
            S2matchConfig::default(),
        );
        assert!((r.matched_weight - 3.95).abs() < 1e-12);
    }

    #[test]
    fn s2match_below_cutoff_equals_smatch() {
        let low = |_: &str, _: &str| 0.89;
        let (a, b) = (g(BOY_AMR), g(CHILD_AMR));
        assert_eq!(
            s2match(&a, &b, &low, S2matchConfig::default()),
            smatch(&a, &b, SmatchConfig::default())
        );
    }

    #[test]
    fn wlk_boy_child_by_hand() {
        // Each graph has 3 nodes and 3 iterations of labels: 9 distinct
        // labels with count 1. Shared: hit-01 and baseball at iteration 0,
        // baseball-with-ARG1-to-hit at iteration 1. Cosine = 3 / 9.
        let v = wlk_similarity(&g(BOY_AMR), &g(CHILD_AMR), WlConfig::default());
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            wlk_similarity(&g(BOY_AMR), &g(BOY_AMR), WlConfig::default()),
            1.0
        );
        assert_eq!(
            wlk_similarity(&g("(a / cat)"), &g("(b / dog)"), WlConfig::default()),
            0.0
        );
    }

    #[test]
    fn wasserstein_single_points_and_identity() {
        let u = vec![vec![0.0, 0.0]];
        let v = vec![vec![3.0, 4.0]];
        assert_eq!(wasserstein_1(&u, &v), 5.0);
        let pts = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 0.0]];
        assert_eq!(wasserstein_1(&pts, &pts), 0.0);
    }

    #[test]
    fn wasserstein_unequal_sizes() {
        // one point at 0 against two points at -1 and 3: each half of the
        // mass travels 1 and 3
        let a = vec![vec![0.0]];
        let b = vec![vec![-1.0], vec![3.0]];
        assert!((wasserstein_1(&a, &b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wwlk_single_node_is_vector_distance() {
        let table = StaticEmbeddingTable::from_entries(vec![
            ("cat".to_string(), vec![0.0, 0.0]),
            ("dog".to_string(), vec![3.0, 4.0]),
        ])
        .unwrap();
        let r = wwlk_similarity(
            &g("(a / cat)"),
            &g("(b / dog)"),
            &table,
            WlConfig::default(),
        );
        assert_eq!(r.distance, 5.0);
        assert_eq!(r.similarity, 1.0 / 6.0);
        let same = wwlk_similarity(&g(BOY_AMR), &g(BOY_AMR), &table, WlConfig::default());
        assert_eq!(same.distance, 0.0);
        assert_eq!(same.similarity, 1.0);
    }

    #[test]
    fn pseudo_vectors_are_stable() {
        let v = pseudo_vector("-", 40);
        assert_eq!(v.len(), 40);
        assert_eq!(v, pseudo_vector("-", 40));
        assert_ne!(v, pseudo_vector("+", 40));
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}
