//! Model memorization: a malicious trainer hides the sensitive training
//! samples it was given inside the released model, either in the low-order
//! mantissa bits of the parameters or in their signs.

use serde::{Deserialize, Serialize};

use super::codec::{self, Codec, SampleShape};
use super::{Artifact, AttackReport};
use crate::dataset::{Dataset, SensitiveSelection};
use crate::error::{Error, Result};
use crate::metrics::{confusion_binary, mean_abs_error, track_curve, AccuracyCurve};
use crate::model::{Model, ModelSpec, SignPenalty, TrainConfig};
use crate::obfuscate::{obfuscate_dataset_individual_traced, IndividualParams};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMethod {
    Lsb { k_bits: u32 },
    Sign { penalty: f64 },
}

/// Train a model whose first `bits.len()` parameters carry the payload in
/// their signs.
pub fn sign_encode_train(
    spec: &ModelSpec,
    dataset: &Dataset,
    bits: &[bool],
    penalty: f64,
    cfg: &TrainConfig,
) -> Result<Model> {
    let init = Model::init(spec.clone(), seed::derive(cfg.seed, "init", 0))?;
    if bits.len() > init.parameter_count() {
        return Err(Error::CapacityExceeded {
            needed: bits.len(),
            available: init.parameter_count(),
        });
    }
    let cfg = TrainConfig {
        sign_penalty: Some(SignPenalty {
            bits: bits.to_vec(),
            weight: penalty,
        }),
        ..cfg.clone()
    };
    init.train(dataset, &cfg)
}

/// Obfuscation applied by the data owner before handing the data over.
#[derive(Clone, Debug, PartialEq)]
pub struct IndividualDefense {
    pub params: IndividualParams,
    pub selection: SensitiveSelection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorizationSetup {
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub bits_per_feature: u8,
    pub method: EncodingMethod,
}

/// Report plus the training curve of the payload-free model.
#[derive(Clone, Debug)]
pub struct MemorizationOutcome {
    pub report: AttackReport,
    pub curve: AccuracyCurve,
}

/// Run the memorization attack on the samples in `secret`.
///
/// The adversary trains on the (possibly obfuscated) data, encodes the
/// sensitive samples it sees, and later decodes them from the released
/// model. Reconstruction error is measured against the original samples.
///
/// Metrics: `bit_recovery_rate`, `reconstruction_mae`,
/// `reconstruction_mae_noised` (defense only), `train_acc`,
/// `val_acc_clean` (model without payload), `val_acc_encoded`,
/// `accuracy_cost`, `payload_bits`.
pub fn memorization_attack_eval(
    train: &Dataset,
    validation: &Dataset,
    secret: &SensitiveSelection,
    defense: Option<&IndividualDefense>,
    setup: &MemorizationSetup,
    seed: u64,
) -> Result<MemorizationOutcome> {
    if secret.is_empty() {
        return Err(Error::Empty("secret selection"));
    }
    if secret.max_index().is_some_and(|m| m >= train.len()) {
        return Err(Error::invalid("secret", "index out of range"));
    }
    let (seen, noised) = match defense {
        Some(d) => {
            let out = obfuscate_dataset_individual_traced(train, &d.selection, &d.params, seed::derive(seed, "obfuscate", 0))?;
            (out.dataset, out.noised)
        }
        None => (train.clone(), Vec::new()),
    };
    let originals: Vec<Vec<f64>> = secret.iter().map(|i| train.samples()[i].features.clone()).collect();
    let stolen: Vec<Vec<f64>> = secret.iter().map(|i| seen.samples()[i].features.clone()).collect();
    let codec = Codec::new(setup.bits_per_feature, SampleShape::Flat(train.dim()), stolen.len())?;
    let payload = codec::samples_to_bits(&stolen, codec, train.domain())?;

    let train_cfg = setup.train.with_seed(seed::derive(seed, "train", 0));
    let init = Model::init(setup.spec.clone(), seed::derive(train_cfg.seed, "init", 0))?;
    let (clean, curve) = track_curve(&init, &seen, validation, &train_cfg)?;
    let (released, recovered_bits) = match setup.method {
        EncodingMethod::Lsb { k_bits } => {
            let m = codec::lsb_encode(&clean, &payload, k_bits)?;
            let bits = codec::lsb_decode(&m, codec, k_bits)?.bits;
            (m, bits)
        }
        EncodingMethod::Sign { penalty } => {
            let m = sign_encode_train(&setup.spec, &seen, &payload.bits, penalty, &train_cfg)?;
            let bits = codec::sign_decode(&m, payload.bits.len())?;
            (m, bits)
        }
    };
    let recovered = codec::bits_to_samples(&codec::SecretPayload::new(recovered_bits.clone(), codec)?, train.domain())?;

    let mut report = AttackReport::new("memorization")
        .with_confusion(confusion_binary(&recovered_bits, &payload.bits)?);
    report.set("payload_bits", payload.bits.len() as f64);
    report.set("bit_recovery_rate", codec::bit_recovery_rate(&payload.bits, &recovered_bits)?);
    let flat_rec: Vec<f64> = recovered.iter().flatten().copied().collect();
    let flat_orig: Vec<f64> = originals.iter().flatten().copied().collect();
    report.set("reconstruction_mae", mean_abs_error(&flat_rec, &flat_orig)?);

    // error restricted to the coordinates the defense perturbed
    let mut noised_err = Vec::new();
    for (pos, idx) in secret.iter().enumerate() {
        if let Some((_, coords)) = noised.iter().find(|(i, _)| *i == idx) {
            for &j in coords {
                noised_err.push((recovered[pos][j] - originals[pos][j]).abs());
            }
        }
    }
    if !noised_err.is_empty() {
        report.set(
            "reconstruction_mae_noised",
            noised_err.iter().sum::<f64>() / noised_err.len() as f64,
        );
    }

    let val_clean = clean.accuracy(validation)?;
    let val_encoded = released.accuracy(validation)?;
    report.set("train_acc", released.accuracy(&seen)?);
    report.set("val_acc_clean", val_clean);
    report.set("val_acc_encoded", val_encoded);
    report.set("accuracy_cost", val_clean - val_encoded);
    report.artifacts = secret
        .iter()
        .zip(recovered)
        .map(|(i, features)| Artifact {
            name: format!("recovered_{i}"),
            features,
        })
        .collect();
    Ok(MemorizationOutcome { report, curve })
}
