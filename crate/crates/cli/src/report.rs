use std::collections::BTreeMap;

use gamma_core::symbols::PhysicsId;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Command;
use crate::effective::EffectiveResults;
use crate::solve::SolveResults;
use crate::verify::VerifyResults;
use crate::willis::WillisResults;

/// A printed formula, or a model relation, that disagrees with its
/// reference by a measured amount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub subject: String,
    pub magnitude: f64,
    pub metrics: BTreeMap<String, f64>,
    pub note: String,
}

impl Finding {
    pub fn new(id: &str, subject: impl Into<String>, magnitude: f64, note: impl Into<String>) -> Self {
        Finding {
            id: id.into(),
            subject: subject.into(),
            magnitude,
            metrics: BTreeMap::new(),
            note: note.into(),
        }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn physics(physics: PhysicsId, variant: &str) -> String {
        format!("{physics}/{variant}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Verify(VerifyResults),
    Solve(SolveResults),
    Effective(EffectiveResults),
    Willis(WillisResults),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    /// The resolved config, overrides and defaults applied.
    pub config: serde_json::Value,
    /// SHA-256 of the compact JSON of `config`.
    pub config_hash: String,
    pub passed: bool,
    pub results: Results,
    pub findings: Vec<Finding>,
    /// Files written next to the report.
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values always serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_order_free() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a": 1, "b": [1, 2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b": [1, 2], "a": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        let c: serde_json::Value = serde_json::from_str(r#"{"a": 2, "b": [1, 2]}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
