//! Binary logistic regression trained by mini-batch SGD, with per-feature
//! standardisation fitted on the training features only.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 0.1,
            l2: 0.0,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("attack.classifier.batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("attack.classifier.learning_rate", "must be > 0"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("attack.classifier.l2", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticClassifier {
    /// Standardisation offsets (training-set means).
    pub mean: Vec<f64>,
    /// Standardisation scales (training-set standard deviations, 1 where flat).
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticClassifier {
    /// A classifier acting on raw (unstandardised) features.
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        let n = weights.len();
        LogisticClassifier {
            mean: vec![0.0; n],
            scale: vec![1.0; n],
            weights,
            bias,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let z = self.standardize(x);
        Ok(self.bias + z.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision(x)?))
    }

    /// Positive iff the probability is at least one half.
    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.decision(x)? >= 0.0)
    }

    /// Fit from zero initial weights. The shuffle order is drawn from `seed`.
    pub fn fit(features: &[Vec<f64>], labels: &[bool], cfg: &LogisticConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: features.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::Empty("classifier training set"));
        }
        let dim = features[0].len();
        if let Some(f) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: f.len(),
            });
        }
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in scale.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let mut clf = LogisticClassifier {
            mean,
            scale,
            weights: vec![0.0; dim],
            bias: 0.0,
        };
        let data: Vec<Vec<f64>> = features.iter().map(|f| clf.standardize(f)).collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut gw = vec![0.0; dim];
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut seed::rng(seed, "logistic-epoch", epoch as u64));
            for chunk in order.chunks(cfg.batch_size) {
                gw.iter_mut().for_each(|g| *g = 0.0);
                let mut gb = 0.0;
                for &i in chunk {
                    let x = &data[i];
                    let z = clf.bias + x.iter().zip(&clf.weights).map(|(a, w)| a * w).sum::<f64>();
                    let y = if labels[i] { 1.0 } else { 0.0 };
                    let err = sigmoid(z) - y;
                    for (g, a) in gw.iter_mut().zip(x) {
                        *g += err * a;
                    }
                    gb += err;
                }
                let m = chunk.len() as f64;
                for (w, g) in clf.weights.iter_mut().zip(&gw) {
                    *w -= cfg.learning_rate * (g / m + cfg.l2 * *w);
                }
                clf.bias -= cfg.learning_rate * gb / m;
            }
        }
        Ok(clf)
    }
}
