use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One metric value for one sentence or graph pair, plus named parts
/// (precision, recall, connectivity scores, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub components: BTreeMap<String, f64>,
}

impl MetricScore {
    pub fn new(metric: impl Into<String>, value: f64) -> Self {
        MetricScore {
            metric: metric.into(),
            value,
            components: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.components.insert(name.to_string(), value);
        self
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.get(name).copied()
    }
}
