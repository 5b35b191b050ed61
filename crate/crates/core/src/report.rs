//! Serializable run reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// `{"config": ..., "metrics": ..., "seeds": ...}`.
///
/// Object keys serialize in sorted order, so equal reports produce equal
/// bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: Value,
    pub metrics: Value,
    pub seeds: BTreeMap<String, u64>,
}

impl MetricReport {
    pub fn new(config: &impl Serialize, metrics: &impl Serialize) -> Result<Self> {
        Ok(Self {
            config: to_value(config)?,
            metrics: to_value(metrics)?,
            seeds: BTreeMap::new(),
        })
    }

    pub fn with_seed(mut self, name: impl Into<String>, seed: u64) -> Self {
        self.seeds.insert(name.into(), seed);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Contract(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Contract(format!("invalid report: {e}")))
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Contract(e.to_string()))
}
