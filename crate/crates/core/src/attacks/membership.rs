//! Membership inference with shadow models.
//!
//! The adversary trains shadow models with the target's algorithm on data it
//! controls, records the confidence vectors they produce on their own training
//! samples ("in") and on held-out samples ("out"), and fits one logistic
//! classifier per true class on those vectors.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{LogisticClassifier, LogisticConfig};
use super::AttackReport;
use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::metrics::confusion_binary;
use crate::model::{Model, ModelSpec, TrainConfig};
use crate::seed;

/// Probabilities below this are floored before taking logs.
const PROB_FLOOR: f64 = 1e-12;

/// Attack-classifier input: the confidence vector on a log scale. Log
/// probabilities separate the near-one confidences of memorised samples far
/// better than raw probabilities.
pub fn attack_features(proba: &[f64]) -> Vec<f64> {
    proba.iter().map(|p| p.max(PROB_FLOOR).ln()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipAttackModel {
    pub num_classes: usize,
    /// One classifier per true class, indexed by label.
    pub classifiers: Vec<LogisticClassifier>,
    /// `(in, out)` training pairs each classifier saw.
    pub pair_counts: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowConfig {
    pub shadow_count: usize,
    /// Training-set size of each shadow; its validation set has the same size.
    pub shadow_train_size: usize,
    #[serde(default)]
    pub classifier: LogisticConfig,
}

impl ShadowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shadow_count < 1 {
            return Err(Error::invalid("attack.shadow_count", "must be at least 1"));
        }
        if self.shadow_train_size < 1 {
            return Err(Error::invalid("attack.shadow_train_size", "must be at least 1"));
        }
        self.classifier.validate()
    }
}

struct ShadowRecord {
    label: usize,
    features: Vec<f64>,
    member: bool,
}

fn run_shadow(
    spec: &ModelSpec,
    pool: &Dataset,
    size: usize,
    cfg: &TrainConfig,
    seed: u64,
    i: usize,
) -> Result<Vec<ShadowRecord>> {
    let picks = index::sample(&mut seed::rng(seed, "shadow-data", i as u64), pool.len(), 2 * size).into_vec();
    let train = pool.subset(&picks[..size])?;
    let val = pool.subset(&picks[size..])?;
    let model = Model::init(spec.clone(), seed::derive(seed, "shadow-init", i as u64))?
        .train(&train, &cfg.with_seed(seed::derive(seed, "shadow-train", i as u64)))?;
    let mut out = Vec::with_capacity(2 * size);
    for (set, member) in [(&train, true), (&val, false)] {
        for s in set.samples() {
            out.push(ShadowRecord {
                label: s.label,
                features: attack_features(&model.predict_proba(&s.features)?),
                member,
            });
        }
    }
    Ok(out)
}

/// Train the attack model. Shadow `i` draws its disjoint train/validation sets
/// from `pool` with a stream derived from `(seed, i)`, so the result does not
/// depend on how shadows are scheduled across threads.
pub fn membership_attack_train(
    target_spec: &ModelSpec,
    pool: &Dataset,
    shadows: &ShadowConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<MembershipAttackModel> {
    shadows.validate()?;
    if pool.len() < 2 * shadows.shadow_train_size {
        return Err(Error::invalid(
            "attack.shadow_train_size",
            format!(
                "pool of {} samples cannot supply train and validation sets of {}",
                pool.len(),
                shadows.shadow_train_size
            ),
        ));
    }
    let records: Vec<Vec<ShadowRecord>> = (0..shadows.shadow_count)
        .into_par_iter()
        .map(|i| run_shadow(target_spec, pool, shadows.shadow_train_size, cfg, seed, i))
        .collect::<Result<_>>()?;

    let c = target_spec.num_classes;
    let mut per_class: Vec<(Vec<Vec<f64>>, Vec<bool>)> = vec![(Vec::new(), Vec::new()); c];
    for r in records.into_iter().flatten() {
        per_class[r.label].0.push(r.features);
        per_class[r.label].1.push(r.member);
    }
    let fitted: Vec<(LogisticClassifier, (usize, usize))> = per_class
        .into_par_iter()
        .enumerate()
        .map(|(k, (xs, ys))| {
            let counts = (ys.iter().filter(|y| **y).count(), ys.iter().filter(|y| !**y).count());
            let clf = if xs.is_empty() {
                LogisticClassifier::new(vec![0.0; c], 0.0)
            } else {
                LogisticClassifier::fit(&xs, &ys, &shadows.classifier, seed::derive(seed, "attack-classifier", k as u64))?
            };
            Ok((clf, counts))
        })
        .collect::<Result<_>>()?;
    let (classifiers, pair_counts) = fitted.into_iter().unzip();
    Ok(MembershipAttackModel {
        num_classes: c,
        classifiers,
        pair_counts,
    })
}

/// `true` means "in the target's training set".
pub fn membership_infer(attack: &MembershipAttackModel, target: &Model, sample: &Sample) -> Result<bool> {
    let clf = attack.classifiers.get(sample.label).ok_or_else(|| {
        Error::invalid("label", format!("{} has no attack classifier", sample.label))
    })?;
    clf.predict(&attack_features(&target.predict_proba(&sample.features)?))
}

/// Query every member and non-member. Metrics: `balanced_accuracy`,
/// `accuracy`, `precision`, `recall`; `per_class_accuracy` is the inference
/// accuracy over samples of each true class.
pub fn membership_attack_eval(
    target: &Model,
    members: &Dataset,
    non_members: &Dataset,
    attack: &MembershipAttackModel,
) -> Result<AttackReport> {
    if members.is_empty() {
        return Err(Error::Empty("member set"));
    }
    if non_members.is_empty() {
        return Err(Error::Empty("non-member set"));
    }
    let c = attack.num_classes;
    let mut preds = Vec::with_capacity(members.len() + non_members.len());
    let mut truth = Vec::with_capacity(preds.capacity());
    let mut class_hits = vec![(0usize, 0usize); c];
    for (set, member) in [(members, true), (non_members, false)] {
        for s in set.samples() {
            let p = membership_infer(attack, target, s)?;
            preds.push(p);
            truth.push(member);
            class_hits[s.label].1 += 1;
            if p == member {
                class_hits[s.label].0 += 1;
            }
        }
    }
    let cm = confusion_binary(&preds, &truth)?;
    let mut report = AttackReport::new("membership").with_confusion(cm);
    report.set("balanced_accuracy", cm.balanced_accuracy());
    report.set("accuracy", cm.accuracy());
    report.set("precision", cm.precision());
    report.set("recall", cm.recall());
    report.per_class_accuracy = class_hits
        .iter()
        .map(|&(hit, n)| if n == 0 { 0.0 } else { hit as f64 / n as f64 })
        .collect();
    Ok(report)
}
