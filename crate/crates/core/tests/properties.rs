mod common;

use std::collections::BTreeSet;

use amrmeter::amr::{parse_penman, AmrGraph};
use amrmeter::embeddings::StaticEmbeddingTable;
use amrmeter::graco::{graco_score, GracoResources, GracoSide, GracoVariant, VectorSource};
use amrmeter::graph::{
    s2match, smatch, smatch_exhaustive, wasserstein_1, wlk_similarity, wwlk_similarity,
    S2matchConfig, SmatchConfig, WlConfig,
};
use amrmeter::lemma::RuleLemmatizer;
use amrmeter::text::tokenize;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(seed: u64, max_vars: usize) -> (AmrGraph, AmrGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + (seed % 2) as usize;
    common::random_pairs(&mut rng, n, max_vars, &common::CONCEPTS_WITH_SENSES)
        .pop()
        .unwrap()
}

fn table() -> StaticEmbeddingTable {
    StaticEmbeddingTable::from_entries([
        ("dog", vec![1.0, 0.2, 0.0]),
        ("cat", vec![0.95, 0.3, 0.05]),
        ("man", vec![0.0, 1.0, 0.1]),
        ("boy", vec![0.1, 0.9, 0.3]),
        ("run", vec![0.3, 0.1, 1.0]),
    ])
    .unwrap()
}

fn triple_set(g: &AmrGraph) -> BTreeSet<(String, String, String)> {
    g.triples(true)
        .into_iter()
        .map(|t| (t.source, t.role, t.target))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penman_round_trip_keeps_triples(seed in any::<u64>()) {
        let (a, _) = pair(seed, 7);
        let back = parse_penman(&a.to_penman()).unwrap();
        prop_assert_eq!(triple_set(&a.canonicalized()), triple_set(&back.canonicalized()));
    }

    #[test]
    fn smatch_bounded_by_exhaustive(seed in any::<u64>()) {
        let (a, b) = pair(seed, 5);
        let cfg = SmatchConfig { seed, ..SmatchConfig::default() };
        let hill = smatch(&a, &b, cfg);
        let best = smatch_exhaustive(&a, &b, cfg).unwrap();
        prop_assert!(hill.f1 <= best.f1 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&hill.f1));
        prop_assert!(hill.precision <= 1.0 && hill.recall <= 1.0);
    }

    #[test]
    fn exhaustive_optimum_ignores_variable_names(seed in any::<u64>()) {
        let (a, b) = pair(seed, 5);
        let cfg = SmatchConfig::default();
        let renamed = b.renamed(|v| format!("z{}", v.len() * 7 + v.chars().last().map_or(0, |c| c as usize)));
        let x = smatch_exhaustive(&a, &b, cfg).unwrap().f1;
        let y = smatch_exhaustive(&a, &renamed, cfg).unwrap().f1;
        prop_assert_eq!(x, y);
    }

    #[test]
    fn wl_kernels_ignore_variable_names(seed in any::<u64>()) {
        let (a, b) = pair(seed, 7);
        let renamed = b.renamed(|v| format!("q_{v}"));
        let wl = WlConfig::default();
        prop_assert_eq!(wlk_similarity(&a, &b, wl), wlk_similarity(&a, &renamed, wl));
        let t = table();
        prop_assert_eq!(
            wwlk_similarity(&a, &b, &t, wl).distance,
            wwlk_similarity(&a, &renamed, &t, wl).distance
        );
    }

    #[test]
    fn s2match_never_below_smatch(seed in any::<u64>()) {
        let (a, b) = pair(seed, 7);
        let cfg = SmatchConfig { seed, ..SmatchConfig::default() };
        let s = smatch(&a, &b, cfg);
        let g = s2match(&a, &b, &table(), S2matchConfig { smatch: cfg, ..S2matchConfig::default() });
        prop_assert!(g.matched_weight >= s.matched_weight);
        prop_assert!(g.f1 <= 1.0);
    }

    #[test]
    fn graph_metrics_in_unit_interval(seed in any::<u64>()) {
        let (a, b) = pair(seed, 7);
        let wl = WlConfig::default();
        let w = wlk_similarity(&a, &b, wl);
        prop_assert!((0.0..=1.0).contains(&w));
        let ww = wwlk_similarity(&a, &b, &table(), wl);
        prop_assert!(ww.distance >= 0.0 && ww.similarity > 0.0 && ww.similarity <= 1.0);
    }

    #[test]
    fn wasserstein_is_a_symmetric_distance(
        a in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..6),
        b in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..6),
    ) {
        prop_assert_eq!(wasserstein_1(&a, &b), wasserstein_1(&b, &a));
        prop_assert!(wasserstein_1(&a, &a).abs() < 1e-12);
        let mut rev = b.clone();
        rev.reverse();
        prop_assert_eq!(wasserstein_1(&a, &b), wasserstein_1(&a, &rev));
    }

    #[test]
    fn graco_ignores_vector_scale(k in 0.01f64..100.0) {
        let suite = common::mini_suite();
        let dog_cat = suite.iter().find(|c| c.id == "dog_cat").unwrap();
        let base = [
            ("woman", vec![1.0, 0.2]),
            ("walk", vec![0.1, 1.0]),
            ("dog", vec![1.0, 1.0]),
            ("down", vec![0.3, 0.7]),
            ("street", vec![0.9, -0.1]),
            ("cat", vec![1.0, -1.0]),
        ];
        let scaled = base.iter().map(|(w, v)| (*w, v.iter().map(|x| x * k).collect::<Vec<_>>()));
        let (t1, t2) = (
            StaticEmbeddingTable::from_entries(base.clone()).unwrap(),
            StaticEmbeddingTable::from_entries(scaled).unwrap(),
        );
        let lem = RuleLemmatizer;
        let score = |t: &StaticEmbeddingTable, variant: GracoVariant| {
            let res = GracoResources { vectors: VectorSource::Static(t), alignments: None, lemmatizer: &lem };
            let side = |s| GracoSide { tokens: dog_cat.tokens(s), lemmas: dog_cat.lemmas(s), amr: dog_cat.amr(s) };
            use amrmeter::embeddings::Side;
            graco_score(&dog_cat.id, side(Side::A), side(Side::B), variant, &res).unwrap().value
        };
        for variant in GracoVariant::ALL.into_iter().filter(|v| !v.contextual) {
            prop_assert!((score(&t1, variant) - score(&t2, variant)).abs() < 1e-12);
        }
    }

    #[test]
    fn tokenize_is_idempotent_on_joined_tokens(s in "[A-Za-z ,.!?']{0,40}") {
        let t = tokenize(&s);
        prop_assert_eq!(tokenize(&t.join(" ")), t);
    }
}
