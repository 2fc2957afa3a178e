//! Metric interface and the built-in metrics keyed by id.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::embeddings::{ContextualEmbeddingStore, EmbeddingError, Side, StaticEmbeddingTable};
use crate::graco::{
    graco_score, ExternalAlignments, GracoError, GracoResources, GracoSide, GracoVariant,
    VectorSource,
};
use crate::graph::{
    s2match, smatch, wlk_similarity, wwlk_similarity, S2matchConfig, SmatchConfig, WlConfig,
};
use crate::harness::suite::TestCase;
use crate::lemma::{Lemmatizer, RuleLemmatizer};
use crate::score::MetricScore;
use crate::text::{
    bert_score, bleu, chrf_pp, meteor_lite, ChrfParams, MeteorParams, SynonymLexicon,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    StaticEmbeddings,
    ContextualEmbeddings,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::StaticEmbeddings => "static embedding table",
            Resource::ContextualEmbeddings => "contextual embedding store",
        })
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("unknown metric `{0}`")]
    Unknown(String),
    #[error("metric {metric} needs a {resource}")]
    MissingResource { metric: String, resource: Resource },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Graco(#[from] GracoError),
}

pub trait Metric: Send + Sync {
    fn id(&self) -> &str;
    fn score(&self, case: &TestCase) -> Result<MetricScore, MetricError>;
}

/// Shared, read-only inputs for the built-in metrics.
#[derive(Clone)]
pub struct Resources {
    pub static_table: Option<Arc<StaticEmbeddingTable>>,
    pub contextual: Option<Arc<ContextualEmbeddingStore>>,
    pub alignments: Option<Arc<ExternalAlignments>>,
    pub lexicon: Option<Arc<SynonymLexicon>>,
    pub lemmatizer: Arc<dyn Lemmatizer>,
    pub seed: u64,
    pub smatch: SmatchConfig,
    pub s2match: S2matchConfig,
    pub wl: WlConfig,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            static_table: None,
            contextual: None,
            alignments: None,
            lexicon: None,
            lemmatizer: Arc::new(RuleLemmatizer),
            seed: 0,
            smatch: SmatchConfig::default(),
            s2match: S2matchConfig::default(),
            wl: WlConfig::default(),
        }
    }
}

impl fmt::Debug for Resources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Resources")
            .field("static_table", &self.static_table.as_ref().map(|t| t.len()))
            .field("contextual", &self.contextual.as_ref().map(|c| c.len()))
            .field("alignments", &self.alignments.as_ref().map(|a| a.len()))
            .field("lexicon", &self.lexicon.as_ref().map(|l| l.len()))
            .field("seed", &self.seed)
            .finish()
    }
}

pub const BUILTIN_METRICS: [&str; 12] = [
    "bleu",
    "chrf++",
    "meteor_lite",
    "bertscore",
    "smatch",
    "s2match",
    "wlk",
    "wwlk",
    "graco_glo",
    "graco_glo_red",
    "graco",
    "graco_red",
];

#[derive(Debug, Clone, Copy)]
enum Kind {
    Bleu,
    Chrf,
    Meteor,
    BertScore,
    Smatch,
    S2match,
    Wlk,
    Wwlk,
    Graco(GracoVariant),
}

struct Builtin {
    id: &'static str,
    kind: Kind,
    res: Resources,
}

fn need<T: ?Sized>(
    opt: &Option<Arc<T>>,
    metric: &str,
    resource: Resource,
) -> Result<Arc<T>, MetricError> {
    opt.clone().ok_or_else(|| MetricError::MissingResource {
        metric: metric.to_string(),
        resource,
    })
}

impl Metric for Builtin {
    fn id(&self) -> &str {
        self.id
    }

    fn score(&self, case: &TestCase) -> Result<MetricScore, MetricError> {
        let r = &self.res;
        let with_seed = SmatchConfig {
            seed: r.seed,
            ..r.smatch
        };
        let score = match self.kind {
            Kind::Bleu => bleu(&case.pair, 4),
            Kind::Chrf => chrf_pp(&case.pair, ChrfParams::default()),
            Kind::Meteor => meteor_lite(&case.pair, r.lexicon.as_deref(), MeteorParams::default()),
            Kind::BertScore => {
                let store = need(&r.contextual, self.id, Resource::ContextualEmbeddings)?;
                bert_score(&store, &case.id)?
            }
            Kind::Smatch => {
                let m = smatch(&case.amr_a, &case.amr_b, with_seed);
                MetricScore::new(self.id, m.f1)
                    .with("precision", m.precision)
                    .with("recall", m.recall)
                    .with("matched", m.matched_weight)
            }
            Kind::S2match => {
                let table = need(&r.static_table, self.id, Resource::StaticEmbeddings)?;
                let cfg = S2matchConfig {
                    smatch: with_seed,
                    ..r.s2match
                };
                let m = s2match(&case.amr_a, &case.amr_b, table.as_ref(), cfg);
                MetricScore::new(self.id, m.f1)
                    .with("precision", m.precision)
                    .with("recall", m.recall)
                    .with("matched", m.matched_weight)
            }
            Kind::Wlk => MetricScore::new(self.id, wlk_similarity(&case.amr_a, &case.amr_b, r.wl)),
            Kind::Wwlk => {
                let table = need(&r.static_table, self.id, Resource::StaticEmbeddings)?;
                let w = wwlk_similarity(&case.amr_a, &case.amr_b, &table, r.wl);
                MetricScore::new(self.id, w.similarity).with("distance", w.distance)
            }
            Kind::Graco(variant) => {
                let static_table;
                let store;
                let vectors = if variant.contextual {
                    store = need(&r.contextual, self.id, Resource::ContextualEmbeddings)?;
                    VectorSource::Contextual(&store)
                } else {
                    static_table = need(&r.static_table, self.id, Resource::StaticEmbeddings)?;
                    VectorSource::Static(&static_table)
                };
                let resources = GracoResources {
                    vectors,
                    alignments: r.alignments.as_deref(),
                    lemmatizer: r.lemmatizer.as_ref(),
                };
                let side = |s: Side| GracoSide {
                    tokens: case.tokens(s),
                    lemmas: case.lemmas(s),
                    amr: case.amr(s),
                };
                graco_score(&case.id, side(Side::A), side(Side::B), variant, &resources)?
            }
        };
        Ok(score)
    }
}

/// Resources a built-in metric cannot run without.
pub fn required_resources(id: &str) -> Result<Vec<Resource>, MetricError> {
    Ok(match canonical_id(id)? {
        "bertscore" | "graco" | "graco_red" => vec![Resource::ContextualEmbeddings],
        "s2match" | "wwlk" | "graco_glo" | "graco_glo_red" => vec![Resource::StaticEmbeddings],
        _ => vec![],
    })
}

fn canonical_id(id: &str) -> Result<&'static str, MetricError> {
    let id = id.trim().to_lowercase();
    let id = match id.as_str() {
        "chrf" | "chrfpp" | "chrf_pp" => "chrf++",
        "meteor" => "meteor_lite",
        "bert_score" | "berts" => "bertscore",
        "wwlk_static" => "wwlk",
        other => other,
    };
    BUILTIN_METRICS
        .into_iter()
        .find(|m| *m == id)
        .ok_or_else(|| MetricError::Unknown(id.to_string()))
}

/// Builds a built-in metric, failing early when a resource is missing.
pub fn build_metric(id: &str, resources: &Resources) -> Result<Box<dyn Metric>, MetricError> {
    let id = canonical_id(id)?;
    for resource in required_resources(id)? {
        let present = match resource {
            Resource::StaticEmbeddings => resources.static_table.is_some(),
            Resource::ContextualEmbeddings => resources.contextual.is_some(),
        };
        if !present {
            return Err(MetricError::MissingResource {
                metric: id.to_string(),
                resource,
            });
        }
    }
    let kind = match id {
        "bleu" => Kind::Bleu,
        "chrf++" => Kind::Chrf,
        "meteor_lite" => Kind::Meteor,
        "bertscore" => Kind::BertScore,
        "smatch" => Kind::Smatch,
        "s2match" => Kind::S2match,
        "wlk" => Kind::Wlk,
        "wwlk" => Kind::Wwlk,
        g => Kind::Graco(GracoVariant::from_metric_id(g).expect("graco variant id")),
    };
    Ok(Box::new(Builtin {
        id,
        kind,
        res: resources.clone(),
    }))
}

/// Ordered collection of metrics to evaluate; built-ins and user metrics
/// mix freely.
#[derive(Default)]
pub struct MetricRegistry {
    metrics: Vec<Box<dyn Metric>>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, metric: Box<dyn Metric>) {
        self.metrics.retain(|m| m.id() != metric.id());
        self.metrics.push(metric);
    }

    pub fn metrics(&self) -> &[Box<dyn Metric>] {
        &self.metrics
    }

    pub fn ids(&self) -> Vec<&str> {
        self.metrics.iter().map(|m| m.id()).collect()
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::suite::{parse_suite, PhenomenonRegistry};

    fn case() -> TestCase {
        let line = r#"{"id":"boy_child","dataset":"SICK","phenomenon":"Hyponymy","sentence_a":"A boy is hitting a baseball","sentence_b":"A child is hitting a baseball","amr_a":"(xv0 / hit-01 :ARG0 (xv2 / boy) :ARG1 (xv1 / baseball))","amr_b":"(xv0 / hit-01 :ARG0 (xv2 / child) :ARG1 (xv1 / baseball))","human_score":4.4}"#;
        parse_suite(line, &PhenomenonRegistry::default())
            .unwrap()
            .remove(0)
    }

    #[test]
    fn missing_resources_are_named() {
        let res = Resources::default();
        for id in ["graco", "bertscore"] {
            match build_metric(id, &res) {
                Err(MetricError::MissingResource { resource, .. }) => {
                    assert_eq!(resource, Resource::ContextualEmbeddings)
                }
                Err(e) => panic!("unexpected error {e}"),
                Ok(_) => panic!("{id} built without a store"),
            }
        }
        assert!(matches!(
            build_metric("wwlk", &res),
            Err(MetricError::MissingResource { .. })
        ));
        assert!(matches!(
            build_metric("rouge", &res),
            Err(MetricError::Unknown(_))
        ));
    }

    #[test]
    fn resource_free_metrics_score() {
        let res = Resources::default();
        let c = case();
        let smatch = build_metric("smatch", &res).unwrap().score(&c).unwrap();
        assert!((smatch.value - 5.0 / 6.0).abs() < 1e-12);
        for id in ["bleu", "chrf", "meteor", "wlk"] {
            let m = build_metric(id, &res).unwrap();
            let v = m.score(&c).unwrap().value;
            assert!((0.0..1.0).contains(&v), "{id} {v}");
        }
    }

    #[test]
    fn registry_replaces_same_id() {
        let res = Resources::default();
        let mut reg = MetricRegistry::new();
        reg.register(build_metric("bleu", &res).unwrap());
        reg.register(build_metric("smatch", &res).unwrap());
        reg.register(build_metric("bleu", &res).unwrap());
        assert_eq!(reg.ids(), vec!["smatch", "bleu"]);
    }
}
