//! The four attacks the defenses are evaluated against, plus the shared
//! report type and the logistic classifier their attack models use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::ConfusionMatrix;

pub mod codec;
pub mod inversion;
pub mod logistic;
pub mod membership;
pub mod memorization;
pub mod property;

pub use codec::{Codec, SampleShape, SecretPayload};
pub use inversion::{invert_class, InversionParams};
pub use logistic::{LogisticClassifier, LogisticConfig};
pub use membership::MembershipAttackModel;
pub use memorization::EncodingMethod;
pub use property::{model_feature, BlobFamily, DatasetFamily, PropertyAttackModel};

/// A recovered vector the attacker ends up with (decoded sample, inversion).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub features: Vec<f64>,
}

/// Outcome of one attack evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    /// Named scalars (recovery rates, similarities, accuracies).
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_class_accuracy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<Artifact>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

impl AttackReport {
    pub fn new(attack: impl Into<String>) -> Self {
        AttackReport {
            attack: attack.into(),
            confusion: None,
            f1: None,
            metrics: BTreeMap::new(),
            per_class_accuracy: Vec::new(),
            artifacts: Vec::new(),
            config: serde_json::Value::Null,
        }
    }

    pub fn with_confusion(mut self, cm: ConfusionMatrix) -> Self {
        self.f1 = cm.f1().ok();
        self.confusion = Some(cm);
        self
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}
