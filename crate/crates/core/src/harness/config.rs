//! Experiment configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::logistic::LogisticConfig;
use crate::attacks::memorization::EncodingMethod;
use crate::dataset::{BlobCenters, Dataset, Domain};
use crate::error::{Error, Result};
use crate::model::{Activation, Architecture, ModelSpec, TrainConfig};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Memorization,
    Membership,
    Inversion,
    Property,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Memorization => "memorization",
            Scenario::Membership => "membership",
            Scenario::Inversion => "inversion",
            Scenario::Property => "property",
        }
    }

    /// Individual-sample scenarios sweep the fraction of obfuscated samples;
    /// group scenarios sweep the augmentation ratio.
    pub fn uses_group_obfuscation(self) -> bool {
        matches!(self, Scenario::Inversion | Scenario::Property)
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memorization" => Ok(Scenario::Memorization),
            "membership" => Ok(Scenario::Membership),
            "inversion" => Ok(Scenario::Inversion),
            "property" => Ok(Scenario::Property),
            other => Err(Error::invalid("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub master_seed: u64,
    /// Where outputs go; not echoed into reports.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: TrainSettings,
    #[serde(default)]
    pub obfuscation: ObfuscationConfig,
    #[serde(default)]
    pub attack: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Fraction held out for validation (memorization and inversion).
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    /// `[height, width]` for PGM artifacts; square images are assumed when
    /// absent and the dimension is a perfect square.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_shape: Option<[usize; 2]>,
}

fn default_validation_fraction() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    File(PathBuf),
    Blobs(BlobConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CenterLayout {
    Uniform,
    SignPattern { scales: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobConfig {
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    /// Property families only: upper end of the per-draw class size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_max: Option<usize>,
    pub spread: f64,
    /// Derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers_seed: Option<u64>,
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    #[serde(default = "default_layout")]
    pub layout: CenterLayout,
    #[serde(default)]
    pub mirrored: bool,
    #[serde(default = "default_true")]
    pub round: bool,
}

fn default_domain() -> [f64; 2] {
    [Domain::PIXEL.lo, Domain::PIXEL.hi]
}

fn default_layout() -> CenterLayout {
    CenterLayout::Uniform
}

fn default_true() -> bool {
    true
}

impl BlobConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        let f = |name: &str| format!("{path}.{name}");
        if self.classes < 2 {
            return Err(Error::invalid(f("classes"), "need at least 2 classes"));
        }
        if self.dim < 1 {
            return Err(Error::invalid(f("dim"), "must be at least 1"));
        }
        if self.per_class < 1 {
            return Err(Error::invalid(f("per_class"), "must be at least 1"));
        }
        if self.per_class_max.is_some_and(|m| m < self.per_class) {
            return Err(Error::invalid(f("per_class_max"), "must be >= per_class"));
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return Err(Error::invalid(f("spread"), "must be finite and >= 0"));
        }
        Domain::new(self.domain[0], self.domain[1]).map_err(|e| e.context(f("domain")))?;
        if let CenterLayout::SignPattern { scales } = &self.layout {
            if scales.is_empty() || scales.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(Error::invalid(f("layout.sign_pattern.scales"), "need values in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        Domain {
            lo: self.domain[0],
            hi: self.domain[1],
        }
    }

    pub fn centers(&self, master_seed: u64) -> BlobCenters {
        let seed = self.centers_seed.unwrap_or_else(|| seed::derive(master_seed, "centers", 0));
        let centers = match &self.layout {
            CenterLayout::Uniform => BlobCenters::uniform(self.classes, self.dim, self.domain(), seed),
            CenterLayout::SignPattern { scales } => {
                BlobCenters::sign_pattern(self.classes, self.dim, scales, self.domain(), seed)
            }
        };
        if self.mirrored {
            centers.mirrored()
        } else {
            centers
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub reg_weight: f64,
}

impl ModelConfig {
    pub fn spec_for(&self, input_dim: usize, num_classes: usize, domain: Domain) -> ModelSpec {
        let base = match self.architecture {
            Architecture::Softmax => ModelSpec::softmax(input_dim, num_classes),
            Architecture::Mlp { hidden } => ModelSpec::mlp(input_dim, hidden, num_classes),
        };
        base.with_domain(domain)
            .with_reg(self.reg_weight)
            .with_activation(self.activation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl TrainSettings {
    /// The seed is filled in per stage by the pipeline.
    pub fn config(&self) -> TrainConfig {
        TrainConfig::new(self.epochs, self.batch_size, self.learning_rate, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObfuscationConfig {
    /// Values of `r`. The `r = 0` baseline is added when missing.
    #[serde(default = "default_sweep")]
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub individual: IndividualSettings,
    #[serde(default)]
    pub group: GroupSettings,
}

fn default_sweep() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0]
}

impl Default for ObfuscationConfig {
    fn default() -> Self {
        ObfuscationConfig {
            sweep: default_sweep(),
            individual: IndividualSettings::default(),
            group: GroupSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndividualSettings {
    #[serde(default = "default_coord_ratio")]
    pub coord_ratio: f64,
    /// Defaults to 0.3 of the domain width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

fn default_coord_ratio() -> f64 {
    1.0
}

impl Default for IndividualSettings {
    fn default() -> Self {
        IndividualSettings {
            coord_ratio: default_coord_ratio(),
            sigma: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSettings {
    #[serde(default = "default_group_sigma")]
    pub sigma: f64,
}

fn default_group_sigma() -> f64 {
    crate::obfuscate::GroupParams::DEFAULT_SIGMA
}

impl Default for GroupSettings {
    fn default() -> Self {
        GroupSettings {
            sigma: default_group_sigma(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemorizationAttack {
    /// Training-set indices of the sensitive samples; the first sample of
    /// each class when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<Vec<usize>>,
    #[serde(default = "default_bits_per_feature")]
    pub bits_per_feature: u8,
    pub method: EncodingMethod,
}

fn default_bits_per_feature() -> u8 {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipAttack {
    /// Size of the target's training set; the same number of samples is held
    /// out as non-members and the rest forms the shadow pool.
    pub target_train_size: usize,
    #[serde(default = "default_shadow_count")]
    pub shadow_count: usize,
    /// Defaults to `target_train_size`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow_train_size: Option<usize>,
    #[serde(default)]
    pub classifier: LogisticConfig,
}

fn default_shadow_count() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionAttack {
    #[serde(default)]
    pub target_class: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
}

fn default_steps() -> usize {
    500
}

fn default_step_size() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyAttack {
    /// Family without the property; `dataset.source` must be blobs and is
    /// the family with it.
    pub without: BlobConfig,
    #[serde(default = "default_shadow_each")]
    pub shadow_each: usize,
    #[serde(default = "default_eval_each")]
    pub eval_each: usize,
    #[serde(default)]
    pub classifier: LogisticConfig,
}

fn default_shadow_each() -> usize {
    40
}

fn default_eval_each() -> usize {
    20
}

/// Scenario-specific attack settings, parsed from the `attack` object.
#[derive(Clone, Debug, PartialEq)]
pub enum AttackSettings {
    Memorization(MemorizationAttack),
    Membership(MembershipAttack),
    Inversion(InversionAttack),
    Property(PropertyAttack),
}

fn parse_attack<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T> {
    let value = if value.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        value.clone()
    };
    serde_json::from_value(value).map_err(|e| Error::invalid("attack", e.to_string()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// The attack settings for this scenario.
    pub fn attack_settings(&self) -> Result<AttackSettings> {
        Ok(match self.scenario {
            Scenario::Memorization => AttackSettings::Memorization(parse_attack(&self.attack)?),
            Scenario::Membership => AttackSettings::Membership(parse_attack(&self.attack)?),
            Scenario::Inversion => AttackSettings::Inversion(parse_attack(&self.attack)?),
            Scenario::Property => AttackSettings::Property(parse_attack(&self.attack)?),
        })
    }

    /// Sweep values in the order they will run, with `r = 0` first.
    pub fn sweep(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for &r in &self.obfuscation.sweep {
            if !out.contains(&r) {
                out.push(r);
            }
        }
        out
    }

    pub fn individual_sigma(&self, domain: Domain) -> f64 {
        self.obfuscation.individual.sigma.unwrap_or(0.3 * domain.width())
    }

    pub fn validate(&self) -> Result<()> {
        let ds = &self.dataset;
        if !(ds.validation_fraction > 0.0 && ds.validation_fraction < 1.0) {
            return Err(Error::invalid("dataset.validation_fraction", "must lie in (0, 1)"));
        }
        if let Some([h, w]) = ds.image_shape {
            if h == 0 || w == 0 {
                return Err(Error::invalid("dataset.image_shape", "dimensions must be positive"));
            }
        }
        if let DatasetSource::Blobs(b) = &ds.source {
            b.validate("dataset.source.blobs")?;
        }
        if let Architecture::Mlp { hidden: 0 } = self.model.architecture {
            return Err(Error::invalid("model.architecture.mlp.hidden", "must be at least 1"));
        }
        if !(self.model.reg_weight.is_finite() && self.model.reg_weight >= 0.0) {
            return Err(Error::invalid("model.reg_weight", "must be finite and >= 0"));
        }
        let t = &self.train;
        if t.batch_size < 1 {
            return Err(Error::invalid("train.batch_size", "must be at least 1"));
        }
        if !(t.learning_rate.is_finite() && t.learning_rate > 0.0) {
            return Err(Error::invalid("train.learning_rate", "must be finite and > 0"));
        }
        for (i, r) in self.obfuscation.sweep.iter().enumerate() {
            if !(0.0..=1.0).contains(r) {
                return Err(Error::invalid(format!("obfuscation.sweep[{i}]"), "must lie in [0, 1]"));
            }
        }
        let ind = &self.obfuscation.individual;
        if !(0.0..=1.0).contains(&ind.coord_ratio) {
            return Err(Error::invalid("obfuscation.individual.coord_ratio", "must lie in [0, 1]"));
        }
        if let Some(s) = ind.sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid("obfuscation.individual.sigma", "must be finite and >= 0"));
            }
        }
        let g = self.obfuscation.group.sigma;
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::invalid("obfuscation.group.sigma", "must be finite and >= 0"));
        }
        match self.attack_settings()? {
            AttackSettings::Memorization(a) => {
                if !(1..=8).contains(&a.bits_per_feature) {
                    return Err(Error::invalid("attack.bits_per_feature", "must lie in 1..=8"));
                }
                match a.method {
                    EncodingMethod::Lsb { k_bits } if !(1..=crate::attacks::codec::MAX_LSB_BITS).contains(&k_bits) => {
                        return Err(Error::invalid("attack.method.lsb.k_bits", "must lie in 1..=20"));
                    }
                    EncodingMethod::Sign { penalty } if !(penalty.is_finite() && penalty >= 0.0) => {
                        return Err(Error::invalid("attack.method.sign.penalty", "must be finite and >= 0"));
                    }
                    _ => {}
                }
                if a.secret.as_ref().is_some_and(Vec::is_empty) {
                    return Err(Error::invalid("attack.secret", "must name at least one sample"));
                }
            }
            AttackSettings::Membership(a) => {
                if a.target_train_size < 1 {
                    return Err(Error::invalid("attack.target_train_size", "must be at least 1"));
                }
                if a.shadow_count < 1 {
                    return Err(Error::invalid("attack.shadow_count", "must be at least 1"));
                }
                if a.shadow_train_size == Some(0) {
                    return Err(Error::invalid("attack.shadow_train_size", "must be at least 1"));
                }
                a.classifier.validate()?;
            }
            AttackSettings::Inversion(a) => {
                if a.steps < 1 {
                    return Err(Error::invalid("attack.steps", "must be at least 1"));
                }
                if !(a.step_size.is_finite() && a.step_size > 0.0) {
                    return Err(Error::invalid("attack.step_size", "must be finite and > 0"));
                }
            }
            AttackSettings::Property(a) => {
                let DatasetSource::Blobs(with) = &ds.source else {
                    return Err(Error::invalid("dataset.source", "property scenario needs a blobs generator"));
                };
                a.without.validate("attack.without")?;
                if (a.without.classes, a.without.dim) != (with.classes, with.dim) || a.without.domain != with.domain {
                    return Err(Error::invalid("attack.without", "classes, dim and domain must match dataset.source.blobs"));
                }
                if a.shadow_each < 2 {
                    return Err(Error::invalid("attack.shadow_each", "must be at least 2"));
                }
                if a.eval_each < 1 {
                    return Err(Error::invalid("attack.eval_each", "must be at least 1"));
                }
                a.classifier.validate()?;
            }
        }
        Ok(())
    }

    /// Load or generate the dataset named by `dataset.source`. Relative file
    /// paths resolve against the working directory.
    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset.source {
            DatasetSource::File(path) => Dataset::load_csv(path),
            DatasetSource::Blobs(b) => b.centers(self.master_seed).sample(
                "blobs",
                b.per_class,
                b.spread,
                b.round,
                seed::derive(self.master_seed, "dataset", 0),
            ),
        }
    }
}

/// Input of the standalone `train` command: a model, its training settings
/// and a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub model: ModelConfig,
    pub train: TrainSettings,
    #[serde(default)]
    pub seed: u64,
}

impl TrainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Initialise from `seed` and train on `data`.
    pub fn fit(&self, data: &Dataset) -> Result<crate::Model> {
        let spec = self.model.spec_for(data.dim(), data.num_classes(), data.domain());
        let cfg = self.train.config().with_seed(self.seed);
        crate::Model::init(spec, self.seed)?.train(data, &cfg)
    }
}
