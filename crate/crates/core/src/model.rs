//! Desk-scale supervised learners: multinomial softmax regression and a
//! one-hidden-layer perceptron, trained by plain mini-batch SGD on
//! cross-entropy plus an L2 penalty on the weights (biases excluded).
//!
//! Models see features rescaled from the spec's declared domain onto `[0, 1]`;
//! callers always pass raw values.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::{Dataset, Domain, Sample};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Softmax,
    Mlp { hidden: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub input_dim: usize,
    pub num_classes: usize,
    #[serde(default)]
    pub reg_weight: f64,
    #[serde(default)]
    pub activation: Activation,
    /// Raw feature domain; inputs are mapped onto `[0, 1]` before use.
    #[serde(default = "unit_domain")]
    pub domain: Domain,
}

fn unit_domain() -> Domain {
    Domain::UNIT
}

impl ModelSpec {
    pub fn softmax(input_dim: usize, num_classes: usize) -> Self {
        ModelSpec {
            architecture: Architecture::Softmax,
            input_dim,
            num_classes,
            reg_weight: 0.0,
            activation: Activation::Relu,
            domain: Domain::UNIT,
        }
    }

    pub fn mlp(input_dim: usize, hidden: usize, num_classes: usize) -> Self {
        ModelSpec {
            architecture: Architecture::Mlp { hidden },
            ..ModelSpec::softmax(input_dim, num_classes)
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_reg(mut self, reg_weight: f64) -> Self {
        self.reg_weight = reg_weight;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    /// Spec matching a dataset's dimension, class count and domain.
    pub fn for_dataset(architecture: Architecture, ds: &Dataset) -> Self {
        ModelSpec {
            architecture,
            input_dim: ds.dim(),
            num_classes: ds.num_classes(),
            reg_weight: 0.0,
            activation: Activation::Relu,
            domain: ds.domain(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("model.input_dim", "must be at least 1"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("model.num_classes", "must be at least 2"));
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return Err(Error::invalid("model.reg_weight", "must be finite and >= 0"));
        }
        if let Architecture::Mlp { hidden: 0 } = self.architecture {
            return Err(Error::invalid("model.architecture.mlp.hidden", "must be at least 1"));
        }
        self.domain.validate()
    }

    /// `(name, shape)` of every parameter group, in storage order.
    pub fn group_layout(&self) -> Vec<(String, Vec<usize>)> {
        let (d, c) = (self.input_dim, self.num_classes);
        match self.architecture {
            Architecture::Softmax => vec![
                ("layer1/weight".into(), vec![d, c]),
                ("layer1/bias".into(), vec![c]),
            ],
            Architecture::Mlp { hidden } => vec![
                ("layer1/weight".into(), vec![d, hidden]),
                ("layer1/bias".into(), vec![hidden]),
                ("layer2/weight".into(), vec![hidden, c]),
                ("layer2/bias".into(), vec![c]),
            ],
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.group_layout()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }
}

/// A named parameter tensor. Matrices are stored row-major with shape
/// `[fan_in, fan_out]`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ParamGroup {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ParamGroup {
    pub fn is_weight(&self) -> bool {
        self.name.ends_with("weight")
    }
}

/// Floats are written with 17 significant digits so every bit of the 64-bit
/// pattern survives a save/load cycle.
impl Serialize for ParamGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut text = String::with_capacity(self.values.len() * 24 + 2);
        text.push('[');
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            text.push_str(&format!("{v:.16e}"));
        }
        text.push(']');
        let raw = serde_json::value::RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
        let mut st = serializer.serialize_struct("ParamGroup", 3)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("shape", &self.shape)?;
        st.serialize_field("values", &raw)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    spec: ModelSpec,
    params: Vec<ParamGroup>,
}

/// Hinge penalty `weight * sum_i max(0, -b_i * theta_i)` tying the sign of the
/// first `bits.len()` parameters to a payload (`b_i = +1` for bit 1, `-1` for
/// bit 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignPenalty {
    pub bits: Vec<bool>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_penalty: Option<SignPenalty>,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            seed,
            sign_penalty: None,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("train.batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("train.learning_rate", "must be finite and > 0"));
        }
        if let Some(p) = &self.sign_penalty {
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::invalid("train.sign_penalty.weight", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Gradients aligned with [`Model::params`].
pub type Gradients = Vec<Vec<f64>>;

struct Layer<'a> {
    weight: &'a [f64],
    bias: &'a [f64],
    fan_in: usize,
    fan_out: usize,
}

impl Model {
    /// Parameters drawn uniformly from `[-0.05, 0.05]`.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng(seed, "init", 0);
        let params = spec
            .group_layout()
            .into_iter()
            .map(|(name, shape)| {
                let n = shape.iter().product();
                let values = (0..n).map(|_| rng.random_range(-0.05..=0.05)).collect();
                ParamGroup {
                    name,
                    shape,
                    values,
                }
            })
            .collect();
        Ok(Model { spec, params })
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let params = spec
            .group_layout()
            .into_iter()
            .map(|(name, shape)| ParamGroup {
                values: vec![0.0; shape.iter().product()],
                name,
                shape,
            })
            .collect();
        Ok(Model { spec, params })
    }

    /// Assemble from explicit groups, checking names, shapes and finiteness.
    pub fn from_parts(spec: ModelSpec, params: Vec<ParamGroup>) -> Result<Self> {
        spec.validate()?;
        let layout = spec.group_layout();
        if layout.len() != params.len() {
            return Err(Error::invalid(
                "params",
                format!("expected {} groups, got {}", layout.len(), params.len()),
            ));
        }
        for ((name, shape), g) in layout.iter().zip(&params) {
            let n: usize = shape.iter().product();
            if &g.name != name || &g.shape != shape || g.values.len() != n {
                return Err(Error::invalid(
                    format!("params.{}", g.name),
                    format!("expected {name} with shape {shape:?}"),
                ));
            }
            if g.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("params.{name}"), "non-finite value"));
            }
        }
        Ok(Model { spec, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[ParamGroup] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ParamGroup] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|g| g.values.len()).sum()
    }

    /// All parameters flattened in group order.
    pub fn get_parameters(&self) -> Vec<f64> {
        self.params.iter().flat_map(|g| g.values.iter().copied()).collect()
    }

    pub fn set_parameters(&self, flat: &[f64]) -> Result<Model> {
        let n = self.parameter_count();
        if flat.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: flat.len(),
            });
        }
        let mut out = self.clone();
        let mut offset = 0;
        for g in &mut out.params {
            let len = g.values.len();
            g.values.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Model = serde_json::from_str(text)?;
        Model::from_parts(raw.spec, raw.params)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text).map_err(|e| e.context(format!("loading {}", path.display())))
    }

    fn layers(&self) -> Vec<Layer<'_>> {
        self.params
            .chunks(2)
            .map(|pair| Layer {
                weight: &pair[0].values,
                bias: &pair[1].values,
                fan_in: pair[0].shape[0],
                fan_out: pair[0].shape[1],
            })
            .collect()
    }

    fn check_dim(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                found: features.len(),
            });
        }
        Ok(())
    }

    fn scale_input(&self, features: &[f64]) -> Vec<f64> {
        let dom = self.spec.domain;
        features.iter().map(|&x| dom.to_unit(x)).collect()
    }

    /// Layer outputs: `acts[0]` is the rescaled input, the last entry holds
    /// the logits.
    fn forward(&self, features: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.layers();
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(self.scale_input(features));
        let last = layers.len() - 1;
        for (l, layer) in layers.iter().enumerate() {
            let input = &acts[l];
            let mut out = layer.bias.to_vec();
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &layer.weight[i * layer.fan_out..(i + 1) * layer.fan_out];
                for (o, w) in out.iter_mut().zip(row) {
                    *o += a * w;
                }
            }
            if l != last {
                for v in &mut out {
                    *v = self.spec.activation.apply(*v);
                }
            }
            acts.push(out);
        }
        acts
    }

    /// Back-propagate `delta` (gradient w.r.t. the logits) through the stored
    /// activations. Parameter gradients are accumulated into `grads` when
    /// given; the gradient w.r.t. the rescaled input is returned.
    fn backward(&self, acts: &[Vec<f64>], mut delta: Vec<f64>, mut grads: Option<&mut Gradients>) -> Vec<f64> {
        let layers = self.layers();
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let input = &acts[l];
            if let Some(g) = grads.as_deref_mut() {
                let gw = &mut g[2 * l];
                for (i, &a) in input.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut gw[i * layer.fan_out..(i + 1) * layer.fan_out];
                    for (gv, d) in row.iter_mut().zip(&delta) {
                        *gv += a * d;
                    }
                }
                for (gb, d) in g[2 * l + 1].iter_mut().zip(&delta) {
                    *gb += d;
                }
            }
            let mut prev = vec![0.0; layer.fan_in];
            for (i, p) in prev.iter_mut().enumerate() {
                let row = &layer.weight[i * layer.fan_out..(i + 1) * layer.fan_out];
                *p = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
            }
            if l > 0 {
                for (p, &a) in prev.iter_mut().zip(input) {
                    *p *= self.spec.activation.derivative_from_output(a);
                }
            }
            delta = prev;
        }
        delta
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(features)?;
        Ok(self.forward(features).pop().unwrap_or_default())
    }

    /// Class confidence scores.
    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(features)?))
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(features)?))
    }

    /// Fraction of samples whose predicted class equals the label.
    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut correct = 0usize;
        for s in dataset.samples() {
            if self.predict(&s.features)? == s.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / dataset.len() as f64)
    }

    /// `0.5 * reg_weight * sum of squared weights` (biases excluded).
    pub fn regularization(&self) -> f64 {
        let sq: f64 = self
            .params
            .iter()
            .filter(|g| g.is_weight())
            .flat_map(|g| g.values.iter())
            .map(|w| w * w)
            .sum();
        0.5 * self.spec.reg_weight * sq
    }

    /// Gradient of the regularization term alone.
    pub fn regularization_gradient(&self) -> Gradients {
        self.params
            .iter()
            .map(|g| {
                if g.is_weight() {
                    g.values.iter().map(|w| self.spec.reg_weight * w).collect()
                } else {
                    vec![0.0; g.values.len()]
                }
            })
            .collect()
    }

    /// Mean cross-entropy over the batch plus the regularization term, and
    /// its gradient.
    pub fn loss_and_gradient(&self, batch: &[&Sample]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let mut grads: Gradients = self.params.iter().map(|g| vec![0.0; g.values.len()]).collect();
        let mut loss = 0.0;
        for s in batch {
            self.check_dim(&s.features)?;
            if s.label >= self.spec.num_classes {
                return Err(Error::invalid(
                    "label",
                    format!("{} out of range for {} classes", s.label, self.spec.num_classes),
                ));
            }
            let acts = self.forward(&s.features);
            let logits = acts.last().expect("at least one layer");
            let lp = log_softmax(logits);
            loss -= lp[s.label];
            let mut delta: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
            delta[s.label] -= 1.0;
            self.backward(&acts, delta, Some(&mut grads));
        }
        let n = batch.len() as f64;
        loss /= n;
        for g in &mut grads {
            for v in g.iter_mut() {
                *v /= n;
            }
        }
        if self.spec.reg_weight > 0.0 {
            loss += self.regularization();
            for (g, r) in grads.iter_mut().zip(self.regularization_gradient()) {
                for (v, rv) in g.iter_mut().zip(r) {
                    *v += rv;
                }
            }
        }
        Ok((loss, grads))
    }

    /// `log p(class | x)` and its gradient with respect to the raw features.
    pub fn log_prob_input_gradient(&self, features: &[f64], class: usize) -> Result<(f64, Vec<f64>)> {
        self.check_dim(features)?;
        if class >= self.spec.num_classes {
            return Err(Error::invalid(
                "class",
                format!("{class} out of range for {} classes", self.spec.num_classes),
            ));
        }
        let acts = self.forward(features);
        let lp = log_softmax(acts.last().expect("at least one layer"));
        let mut delta: Vec<f64> = lp.iter().map(|v| -v.exp()).collect();
        delta[class] += 1.0;
        let width = self.spec.domain.width();
        let grad = self
            .backward(&acts, delta, None)
            .into_iter()
            .map(|g| g / width)
            .collect();
        Ok((lp[class], grad))
    }

    fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.dim() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                found: dataset.dim(),
            });
        }
        if dataset.num_classes() > self.spec.num_classes {
            return Err(Error::invalid(
                "dataset.num_classes",
                format!(
                    "{} classes but the model has {}",
                    dataset.num_classes(),
                    self.spec.num_classes
                ),
            ));
        }
        Ok(())
    }

    /// Shuffled mini-batch SGD for `cfg.epochs` passes.
    pub fn train(&self, dataset: &Dataset, cfg: &TrainConfig) -> Result<Model> {
        self.train_with_hook(dataset, cfg, |_, _| Ok(()))
    }

    /// As [`Model::train`], calling `hook(epoch, model)` after every epoch
    /// (epochs counted from 1).
    pub fn train_with_hook<F>(&self, dataset: &Dataset, cfg: &TrainConfig, mut hook: F) -> Result<Model>
    where
        F: FnMut(usize, &Model) -> Result<()>,
    {
        cfg.validate()?;
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        self.check_dataset(dataset)?;
        if let Some(p) = &cfg.sign_penalty {
            if p.bits.len() > self.parameter_count() {
                return Err(Error::CapacityExceeded {
                    needed: p.bits.len(),
                    available: self.parameter_count(),
                });
            }
        }
        let mut model = self.clone();
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let samples = dataset.samples();
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut seed::rng(cfg.seed, "epoch", epoch as u64));
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
                let (_, mut grads) = model.loss_and_gradient(&batch)?;
                if let Some(p) = &cfg.sign_penalty {
                    model.add_sign_penalty_gradient(p, &mut grads);
                }
                for (g, dg) in model.params.iter_mut().zip(&grads) {
                    for (v, d) in g.values.iter_mut().zip(dg) {
                        *v -= cfg.learning_rate * d;
                    }
                }
            }
            hook(epoch + 1, &model)?;
        }
        Ok(model)
    }

    /// Sub-gradient of the sign hinge. A zero parameter decodes as bit 1, so
    /// it only counts as violating when the target bit is 0.
    fn add_sign_penalty_gradient(&self, penalty: &SignPenalty, grads: &mut Gradients) {
        let mut k = 0;
        'outer: for (g, dg) in self.params.iter().zip(grads.iter_mut()) {
            for (v, d) in g.values.iter().zip(dg.iter_mut()) {
                let Some(&bit) = penalty.bits.get(k) else {
                    break 'outer;
                };
                if bit && *v < 0.0 {
                    *d -= penalty.weight;
                } else if !bit && *v >= 0.0 {
                    *d += penalty.weight;
                }
                k += 1;
            }
        }
    }

    pub fn sign_penalty(&self, penalty: &SignPenalty) -> f64 {
        self.get_parameters()
            .iter()
            .zip(&penalty.bits)
            .map(|(&v, &b)| {
                let s = if b { 1.0 } else { -1.0 };
                (-s * v).max(0.0)
            })
            .sum::<f64>()
            * penalty.weight
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Domain;

    fn sample(f: &[f64], y: usize) -> Sample {
        Sample::new(f.to_vec(), y)
    }

    #[test]
    fn shapes() {
        let m = Model::init(ModelSpec::softmax(4, 3), 1).unwrap();
        let shapes: Vec<_> = m.params().iter().map(|g| g.shape.clone()).collect();
        assert_eq!(shapes, vec![vec![4, 3], vec![3]]);
        assert_eq!(m.get_parameters().len(), 15);
        let m = Model::init(ModelSpec::mlp(4, 8, 3), 1).unwrap();
        let shapes: Vec<_> = m.params().iter().map(|g| g.shape.clone()).collect();
        assert_eq!(shapes, vec![vec![4, 8], vec![8], vec![8, 3], vec![3]]);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Model::init(ModelSpec::mlp(5, 7, 3), 42).unwrap();
        let b = Model::init(ModelSpec::mlp(5, 7, 3), 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, Model::init(ModelSpec::mlp(5, 7, 3), 43).unwrap());
        assert!(a.get_parameters().iter().all(|v| v.abs() <= 0.05));
    }

    #[test]
    fn invalid_specs() {
        assert!(Model::init(ModelSpec::softmax(0, 3), 0).is_err());
        assert!(Model::init(ModelSpec::softmax(2, 1), 0).is_err());
        assert!(Model::init(ModelSpec::softmax(2, 2).with_reg(-1.0), 0).is_err());
        assert!(Model::init(ModelSpec::mlp(2, 0, 2), 0).is_err());
    }

    #[test]
    fn zero_weights_give_uniform_output_and_ln2_loss() {
        let m = Model::zeros(ModelSpec::softmax(3, 2)).unwrap();
        assert_eq!(m.predict_proba(&[0.2, 0.4, 0.9]).unwrap(), vec![0.5, 0.5]);
        let s = sample(&[0.2, 0.4, 0.9], 1);
        let (loss, _) = m.loss_and_gradient(&[&s]).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        let m4 = Model::zeros(ModelSpec::mlp(3, 4, 4)).unwrap();
        for p in m4.predict_proba(&[0.1, 0.2, 0.3]).unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_errors() {
        let m = Model::init(ModelSpec::softmax(3, 2), 0).unwrap();
        assert!(matches!(m.loss_and_gradient(&[]), Err(Error::Empty(_))));
        let s = sample(&[0.1, 0.2], 0);
        assert!(matches!(
            m.loss_and_gradient(&[&s]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(m.predict_proba(&[0.0; 4]).is_err());
    }

    #[test]
    fn regularization_adds_half_squared_weight_norm() {
        let m0 = Model::init(ModelSpec::mlp(3, 4, 3), 5).unwrap();
        let m1 = m0.set_spec_reg(1.0);
        let batch = [sample(&[0.1, 0.5, 0.7], 2), sample(&[0.9, 0.3, 0.2], 0)];
        let refs: Vec<&Sample> = batch.iter().collect();
        let (l0, _) = m0.loss_and_gradient(&refs).unwrap();
        let (l1, _) = m1.loss_and_gradient(&refs).unwrap();
        let sq: f64 = m0
            .params()
            .iter()
            .filter(|g| g.is_weight())
            .flat_map(|g| &g.values)
            .map(|w| w * w)
            .sum();
        assert!((l1 - l0 - 0.5 * sq).abs() < 1e-12);
        let rg = m1.regularization_gradient();
        for (g, r) in m1.params().iter().zip(rg) {
            for (v, rv) in g.values.iter().zip(r) {
                let want = if g.is_weight() { *v } else { 0.0 };
                assert_eq!(rv, want);
            }
        }
    }

    impl Model {
        fn set_spec_reg(&self, reg: f64) -> Model {
            let mut m = self.clone();
            m.spec.reg_weight = reg;
            m
        }
    }

    #[test]
    fn flat_parameter_roundtrip_and_indexing() {
        let m = Model::init(ModelSpec::mlp(3, 2, 2), 9).unwrap();
        let flat = m.get_parameters();
        assert_eq!(m.set_parameters(&flat).unwrap(), m);
        let mut p = flat.clone();
        p[7] += 1.0;
        let m2 = m.set_parameters(&p).unwrap();
        // group 1 (layer1/bias) starts at offset 6
        assert_eq!(m2.params()[1].values[1], m.params()[1].values[1] + 1.0);
        let diff: Vec<usize> = m2
            .get_parameters()
            .iter()
            .zip(&flat)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(diff, vec![7]);
        assert!(m.set_parameters(&flat[1..]).is_err());
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let mut m = Model::init(ModelSpec::mlp(3, 2, 2).with_domain(Domain::PIXEL), 3).unwrap();
        let mut p = m.get_parameters();
        p[0] = f64::from_bits(p[0].to_bits() ^ 1);
        p[1] = 1.0e-300;
        p[2] = -0.0;
        m = m.set_parameters(&p).unwrap();
        let back = Model::from_json(&m.to_json().unwrap()).unwrap();
        let a: Vec<u64> = m.get_parameters().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.get_parameters().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(back.spec(), m.spec());
    }

    #[test]
    fn zero_epochs_is_identity() {
        let ds = crate::dataset::gen_blobs(2, 3, 5, 1, 1, 10.0, Domain::PIXEL).unwrap();
        let m = Model::init(ModelSpec::softmax(3, 2).with_domain(Domain::PIXEL), 1).unwrap();
        let cfg = TrainConfig::new(0, 4, 0.1, 1);
        assert_eq!(m.train(&ds, &cfg).unwrap(), m);
    }

    #[test]
    fn train_rejects_bad_input() {
        let ds = crate::dataset::gen_blobs(2, 3, 5, 1, 1, 10.0, Domain::PIXEL).unwrap();
        let m = Model::init(ModelSpec::softmax(4, 2), 1).unwrap();
        assert!(m.train(&ds, &TrainConfig::new(1, 4, 0.1, 1)).is_err());
        let m = Model::init(ModelSpec::softmax(3, 2), 1).unwrap();
        let empty = ds.with_samples(vec![]).unwrap();
        assert!(m.train(&empty, &TrainConfig::new(1, 4, 0.1, 1)).is_err());
        assert!(m.train(&ds, &TrainConfig::new(1, 4, 0.0, 1)).is_err());
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.3, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
    }

    #[test]
    fn hand_fixed_accuracy() {
        // class 1 iff x0 > x1
        let spec = ModelSpec::softmax(2, 2);
        let m = Model::from_parts(
            spec,
            vec![
                ParamGroup {
                    name: "layer1/weight".into(),
                    shape: vec![2, 2],
                    values: vec![0.0, 1.0, 0.0, -1.0],
                },
                ParamGroup {
                    name: "layer1/bias".into(),
                    shape: vec![2],
                    values: vec![0.0, 0.0],
                },
            ],
        )
        .unwrap();
        let ds = Dataset::new(
            "h",
            2,
            2,
            Domain::UNIT,
            vec![
                sample(&[0.9, 0.1], 1),
                sample(&[0.2, 0.8], 0),
                sample(&[0.6, 0.5], 1),
                sample(&[0.7, 0.3], 0),
            ],
        )
        .unwrap();
        assert_eq!(m.accuracy(&ds).unwrap(), 0.75);
    }
}
