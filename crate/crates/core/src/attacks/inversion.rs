//! Model inversion: projected gradient ascent on `log p(class | x)` over the
//! input box, starting from the domain midpoint. Against a classifier that
//! learned a class from its average appearance, the result approximates the
//! class mean.

use serde::{Deserialize, Serialize};

use super::{Artifact, AttackReport};
use crate::dataset::{Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::metrics::{cosine_similarity, mse, AccuracyCurve};
use crate::model::{Model, ModelSpec, TrainConfig};
use crate::obfuscate::{obfuscate_dataset_groups, GroupParams};
use crate::seed;

const MAX_BACKTRACKS: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionParams {
    pub steps: usize,
    /// Step length in rescaled `[0, 1]` input units per unit gradient.
    pub step_size: f64,
    /// Starting point in raw units; the domain midpoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl Default for InversionParams {
    fn default() -> Self {
        InversionParams {
            steps: 500,
            step_size: 0.1,
            init: None,
        }
    }
}

impl InversionParams {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::invalid("inversion.steps", "must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("inversion.step_size", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub features: Vec<f64>,
    pub initial_confidence: f64,
    pub final_confidence: f64,
    pub steps_taken: usize,
}

/// Projected ascent with backtracking: a step that would lower the class
/// log-probability is halved until it does not, so the confidence never
/// decreases. Stops early once no step improves.
pub fn invert_class(model: &Model, class: usize, params: &InversionParams) -> Result<Inversion> {
    params.validate()?;
    let spec = model.spec();
    if class >= spec.num_classes {
        return Err(Error::invalid(
            "class",
            format!("{class} out of range for {} classes", spec.num_classes),
        ));
    }
    let domain = spec.domain;
    let mut x = match &params.init {
        Some(init) => {
            if init.len() != spec.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: spec.input_dim,
                    found: init.len(),
                });
            }
            if init.iter().any(|v| !domain.contains(*v)) {
                return Err(Error::invalid("inversion.init", "outside the domain"));
            }
            init.clone()
        }
        None => vec![domain.midpoint(); spec.input_dim],
    };
    // raw-unit step for a unit-space step: x += eta * width^2 * dlogp/dx
    let scale = domain.width() * domain.width();
    let (mut logp, mut grad) = model.log_prob_input_gradient(&x, class)?;
    let initial = logp.exp();
    let mut taken = 0;
    for _ in 0..params.steps {
        let mut eta = params.step_size;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(v, g)| domain.clip(v + eta * scale * g))
                .collect();
            let (lp, g) = model.log_prob_input_gradient(&cand, class)?;
            if lp >= logp {
                accepted = Some((cand, lp, g));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, lp, g)) = accepted else { break };
        let moved = cand != x;
        x = cand;
        logp = lp;
        grad = g;
        taken += 1;
        if !moved {
            break;
        }
    }
    Ok(Inversion {
        features: x,
        initial_confidence: initial,
        final_confidence: logp.exp(),
        steps_taken: taken,
    })
}

/// Everything an inversion evaluation produces.
#[derive(Clone, Debug)]
pub struct InversionOutcome {
    pub report: AttackReport,
    pub curve: AccuracyCurve,
    pub model: Model,
}

/// Train a target on `train` (group-obfuscating `class` first when a defense
/// is given), invert `class`, and compare the inversion with the original
/// class mean, both centred on the domain midpoint.
///
/// Metrics: `cosine_similarity`, `mse`, `final_confidence`, `train_acc`,
/// `val_acc`.
#[allow(clippy::too_many_arguments)]
pub fn inversion_attack_eval(
    train: &Dataset,
    validation: &Dataset,
    class: usize,
    defense: Option<&GroupParams>,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    params: &InversionParams,
    seed: u64,
) -> Result<InversionOutcome> {
    let true_mean = train.class_mean(class)?;
    let data = match defense {
        Some(p) => obfuscate_dataset_groups(train, &[GroupSpec::ByLabel(class)], p, seed::derive(seed, "obfuscate", 0))?,
        None => train.clone(),
    };
    let cfg = cfg.with_seed(seed::derive(seed, "train", 0));
    let init = Model::init(spec.clone(), seed::derive(seed, "init", 0))?;
    let (model, curve) = crate::metrics::track_curve(&init, &data, validation, &cfg)?;
    let inv = invert_class(&model, class, params)?;
    let mid = train.domain().midpoint();
    let a: Vec<f64> = inv.features.iter().map(|v| v - mid).collect();
    let b: Vec<f64> = true_mean.iter().map(|v| v - mid).collect();
    let mut report = AttackReport::new("inversion");
    report.set("cosine_similarity", cosine_similarity(&a, &b).unwrap_or(0.0));
    report.set("mse", mse(&inv.features, &true_mean)?);
    report.set("initial_confidence", inv.initial_confidence);
    report.set("final_confidence", inv.final_confidence);
    report.set("train_acc", model.accuracy(&data)?);
    report.set("val_acc", model.accuracy(validation)?);
    report.artifacts = vec![
        Artifact {
            name: format!("inversion_class{class}"),
            features: inv.features,
        },
        Artifact {
            name: format!("true_mean_class{class}"),
            features: true_mean,
        },
    ];
    Ok(InversionOutcome { report, curve, model })
}
