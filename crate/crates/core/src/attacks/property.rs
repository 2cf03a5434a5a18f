//! Model classification (property inference): predict a global attribute of
//! a model's training set from per-group parameter statistics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{LogisticClassifier, LogisticConfig};
use super::AttackReport;
use crate::dataset::{BlobCenters, Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::metrics::{confusion_binary, track_curve, AccuracyCurve};
use crate::model::{Model, ModelSpec, TrainConfig};
use crate::obfuscate::{obfuscate_dataset_groups, GroupParams};
use crate::seed;

/// `(mean, population std)` of every parameter group, in group order.
pub fn model_feature(model: &Model) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * model.params().len());
    for g in model.params() {
        let n = g.values.len() as f64;
        let mean = g.values.iter().sum::<f64>() / n;
        let var = g.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        out.push(mean);
        out.push(var.sqrt());
    }
    out
}

/// A source of training sets sharing (or lacking) some property.
pub trait DatasetFamily: Sync {
    fn draw(&self, seed: u64) -> Result<Dataset>;
}

/// Fresh samples around fixed blob centers.
///
/// With `per_class_max` set, each draw picks its per-class size uniformly from
/// `per_class..=per_class_max`, so training-set size alone does not identify
/// the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobFamily {
    pub name: String,
    pub centers: BlobCenters,
    pub per_class: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_max: Option<usize>,
    pub spread: f64,
    #[serde(default)]
    pub round: bool,
}

impl DatasetFamily for BlobFamily {
    fn draw(&self, seed: u64) -> Result<Dataset> {
        let n = match self.per_class_max {
            Some(max) if max > self.per_class => {
                seed::rng(seed, "family-size", 0).random_range(self.per_class..=max)
            }
            Some(max) if max < self.per_class => {
                return Err(Error::invalid("per_class_max", "must be >= per_class"));
            }
            _ => self.per_class,
        };
        self.centers.sample(&self.name, n, self.spread, self.round, seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyAttackModel {
    pub classifier: LogisticClassifier,
    pub group_count: usize,
}

impl PropertyAttackModel {
    /// `true` means "trained on data with the property".
    pub fn predict(&self, model: &Model) -> Result<bool> {
        let f = model_feature(model);
        if f.len() != 2 * self.group_count {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.group_count,
                found: f.len(),
            });
        }
        self.classifier.predict(&f)
    }
}

/// A trained family member together with its accuracy on a fresh clean draw.
#[derive(Clone, Debug)]
pub struct FamilyModel {
    pub model: Model,
    pub val_acc: f64,
    pub curve: AccuracyCurve,
}

/// Train `n` models on independent draws from `family`. When `defense` is
/// set, each training set is group-obfuscated as a whole before training.
/// Accuracy is measured on a separate clean draw.
#[allow(clippy::too_many_arguments)]
pub fn train_family_models(
    spec: &ModelSpec,
    family: &dyn DatasetFamily,
    n: usize,
    cfg: &TrainConfig,
    defense: Option<&GroupParams>,
    seed: u64,
    stage: &str,
) -> Result<Vec<FamilyModel>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let clean = family.draw(seed::derive(seed, &format!("{stage}-data"), i))?;
            let data = match defense {
                Some(p) => obfuscate_dataset_groups(&clean, &[GroupSpec::WholeDataset], p, seed::derive(seed, &format!("{stage}-obfuscate"), i))?,
                None => clean,
            };
            let val = family.draw(seed::derive(seed, &format!("{stage}-val"), i))?;
            let init = Model::init(spec.clone(), seed::derive(seed, &format!("{stage}-init"), i))?;
            let (model, curve) =
                track_curve(&init, &data, &val, &cfg.with_seed(seed::derive(seed, &format!("{stage}-train"), i)))?;
            let val_acc = model.accuracy(&val)?;
            Ok(FamilyModel { model, val_acc, curve })
        })
        .collect()
}

/// Fit the meta-classifier on feature vectors of models labelled with (1) or
/// without (0) the property.
pub fn fit_property_classifier(
    with: &[Model],
    without: &[Model],
    cfg: &LogisticConfig,
    seed: u64,
) -> Result<PropertyAttackModel> {
    if with.len() < 2 || without.len() < 2 {
        return Err(Error::invalid("attack.n_each", "need at least 2 shadow models per family"));
    }
    let group_count = with[0].params().len();
    let mut xs = Vec::with_capacity(with.len() + without.len());
    let mut ys = Vec::with_capacity(xs.capacity());
    for (set, label) in [(with, true), (without, false)] {
        for m in set {
            xs.push(model_feature(m));
            ys.push(label);
        }
    }
    if xs.iter().all(|x| x == &xs[0]) {
        return Err(Error::invalid("attack", "all shadow-model features are identical"));
    }
    Ok(PropertyAttackModel {
        classifier: LogisticClassifier::fit(&xs, &ys, cfg, seed)?,
        group_count,
    })
}

/// Train `n_each` shadow models per family and the meta-classifier on top.
#[allow(clippy::too_many_arguments)]
pub fn property_attack_train(
    spec: &ModelSpec,
    family_with: &dyn DatasetFamily,
    family_without: &dyn DatasetFamily,
    n_each: usize,
    cfg: &TrainConfig,
    classifier: &LogisticConfig,
    seed: u64,
) -> Result<PropertyAttackModel> {
    if n_each < 2 {
        return Err(Error::invalid("attack.n_each", "must be at least 2"));
    }
    let with = train_family_models(spec, family_with, n_each, cfg, None, seed, "shadow-with")?;
    let without = train_family_models(spec, family_without, n_each, cfg, None, seed, "shadow-without")?;
    let with: Vec<Model> = with.into_iter().map(|f| f.model).collect();
    let without: Vec<Model> = without.into_iter().map(|f| f.model).collect();
    fit_property_classifier(&with, &without, classifier, seed::derive(seed, "meta-classifier", 0))
}

/// Classify held-out models. Positive = "with property". Metrics: `recall`
/// (with-property models detected), `specificity`, `accuracy`.
pub fn property_attack_eval(
    attack: &PropertyAttackModel,
    with: &[Model],
    without: &[Model],
) -> Result<AttackReport> {
    if with.is_empty() || without.is_empty() {
        return Err(Error::Empty("evaluation model set"));
    }
    let mut preds = Vec::new();
    let mut truth = Vec::new();
    for (set, label) in [(with, true), (without, false)] {
        for m in set {
            preds.push(attack.predict(m)?);
            truth.push(label);
        }
    }
    let cm = confusion_binary(&preds, &truth)?;
    let mut report = AttackReport::new("property").with_confusion(cm);
    report.set("recall", cm.recall());
    report.set("specificity", cm.specificity());
    report.set("accuracy", cm.accuracy());
    Ok(report)
}
