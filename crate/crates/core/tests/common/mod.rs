//! Shared fixtures and random graph generation for integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use amrmeter::amr::{AmrGraph, Attribute, Instance, Relation};
use amrmeter::embeddings::{ContextualEmbeddingStore, Side};
use amrmeter::graph::pseudo_vector;
use amrmeter::harness::{load_suite, PhenomenonRegistry, TestCase};
use amrmeter::text::tokenize;
use rand::seq::SliceRandom;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn mini_suite() -> Vec<TestCase> {
    load_suite(data("mini_suite.jsonl"), &PhenomenonRegistry::default()).expect("mini suite loads")
}

pub const ROLES: [&str; 4] = [":ARG0", ":ARG1", ":ARG2", ":mod"];
pub const ATTRS: [(&str, &str); 3] = [(":polarity", "-"), (":quant", "2"), (":mode", "imperative")];
/// Concept pool without two senses of one lemma.
pub const CONCEPTS: [&str; 5] = ["dog", "cat", "man", "boy", "run-01"];
/// Adds a sense variant so the sense coefficient comes into play.
pub const CONCEPTS_WITH_SENSES: [&str; 6] = ["dog", "cat", "man", "boy", "run-01", "run-02"];

pub fn random_graph(
    rng: &mut ChaCha8Rng,
    max_vars: usize,
    concepts: &[&str],
    prefix: &str,
) -> AmrGraph {
    let n = rng.random_range(1..=max_vars);
    let vars: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let instances = vars
        .iter()
        .map(|v| Instance {
            variable: v.clone(),
            concept: concepts[rng.random_range(0..concepts.len())].to_string(),
        })
        .collect();
    let mut relations: Vec<Relation> = Vec::new();
    for i in 1..n {
        let parent = rng.random_range(0..i);
        relations.push(Relation {
            source: vars[parent].clone(),
            role: ROLES[rng.random_range(0..ROLES.len())].to_string(),
            target: vars[i].clone(),
        });
    }
    if n > 2 && rng.random_bool(0.3) {
        let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
        let rel = Relation {
            source: vars[s].clone(),
            role: ROLES[rng.random_range(0..ROLES.len())].to_string(),
            target: vars[t].clone(),
        };
        if s != t && !relations.contains(&rel) {
            relations.push(rel);
        }
    }
    let mut attributes = Vec::new();
    for v in &vars {
        if rng.random_bool(0.25) {
            let (role, value) = ATTRS[rng.random_range(0..ATTRS.len())];
            attributes.push(Attribute {
                source: v.clone(),
                role: role.into(),
                value: value.into(),
            });
        }
    }
    AmrGraph::new(vars[0].clone(), instances, attributes, relations)
        .expect("generated graph is valid")
}

/// A copy of `g` under new variable names with one concept changed and
/// instances listed in a shuffled order.
pub fn perturbed(rng: &mut ChaCha8Rng, g: &AmrGraph, concepts: &[&str]) -> AmrGraph {
    let renamed = g.renamed(|v| format!("w{v}"));
    let mut instances = renamed.instances().to_vec();
    let k = rng.random_range(0..instances.len());
    instances[k].concept = concepts[rng.random_range(0..concepts.len())].to_string();
    instances.shuffle(rng);
    AmrGraph::new(
        renamed.root().to_string(),
        instances,
        renamed.attributes().to_vec(),
        renamed.relations().to_vec(),
    )
    .expect("perturbed graph is valid")
}

/// Random pairs, alternating independent graphs and perturbed copies.
pub fn random_pairs(
    rng: &mut ChaCha8Rng,
    count: usize,
    max_vars: usize,
    concepts: &[&str],
) -> Vec<(AmrGraph, AmrGraph)> {
    (0..count)
        .map(|i| {
            let a = random_graph(rng, max_vars, concepts, "a");
            let b = if i % 2 == 0 {
                random_graph(rng, max_vars, concepts, "b")
            } else {
                perturbed(rng, &a, concepts)
            };
            (a, b)
        })
        .collect()
}

/// A synthetic contextual store for every case: a token's vector mixes a
/// word-level and a sentence-level pseudo vector.
pub fn synthetic_store(cases: &[TestCase]) -> ContextualEmbeddingStore {
    let mut text = String::from("{\"manifest\": {\"model\": \"synthetic\"}}\n");
    for case in cases {
        for (side, sentence) in [(Side::A, &case.sentence_a), (Side::B, &case.sentence_b)] {
            let tokens = tokenize(sentence);
            let ctx = pseudo_vector(sentence, 4);
            let vectors: Vec<Vec<f64>> = tokens
                .iter()
                .map(|t| {
                    pseudo_vector(t, 4)
                        .iter()
                        .zip(&ctx)
                        .map(|(w, c)| w + 0.1 * c)
                        .collect()
                })
                .collect();
            let rec = serde_json::json!({
                "id": case.id, "side": side.to_string(), "tokens": tokens, "vectors": vectors, "dim": 4
            });
            text.push_str(&rec.to_string());
            text.push('\n');
        }
    }
    ContextualEmbeddingStore::from_reader(text.as_bytes()).expect("synthetic store parses")
}

pub fn swapped(case: &TestCase) -> TestCase {
    let record = serde_json::json!({
        "id": case.id,
        "dataset": case.dataset.to_string(),
        "phenomenon": case.phenomenon,
        "sentence_a": case.sentence_b,
        "sentence_b": case.sentence_a,
        "amr_a": case.amr_b.to_penman(),
        "amr_b": case.amr_a.to_penman(),
        "human_score": case.human_score,
    });
    amrmeter::harness::suite::parse_suite(&record.to_string(), &PhenomenonRegistry::default())
        .expect("swapped case parses")
        .remove(0)
}

pub fn identity(case: &TestCase) -> TestCase {
    let record = serde_json::json!({
        "id": case.id,
        "dataset": case.dataset.to_string(),
        "phenomenon": case.phenomenon,
        "sentence_a": case.sentence_a,
        "sentence_b": case.sentence_a,
        "amr_a": case.amr_a.to_penman(),
        "amr_b": case.amr_a.to_penman(),
        "human_score": case.human_score,
    });
    amrmeter::harness::suite::parse_suite(&record.to_string(), &PhenomenonRegistry::default())
        .expect("identity case parses")
        .remove(0)
}
