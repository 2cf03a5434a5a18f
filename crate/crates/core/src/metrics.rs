//! Confusion matrices, F1, similarity measures and per-epoch accuracy curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{Model, TrainConfig};

/// Binary confusion counts. The positive class is "in the training set" for
/// membership and "has the property" for model classification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    /// Convert a row-normalised matrix (as printed in result tables) to
    /// counts, assuming `per_class` actual positives and as many negatives.
    pub fn from_rates(tp: f64, fn_: f64, fp: f64, tn: f64, per_class: u64) -> Result<Self> {
        let rates = [tp, fn_, fp, tn];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::invalid("rates", "every rate must lie in [0, 1]"));
        }
        let n = per_class as f64;
        let c = |r: f64| (r * n).round() as u64;
        Ok(ConfusionMatrix::new(c(tp), c(fn_), c(fp), c(tn)))
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// True-positive rate.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// Mean of the true-positive and true-negative rates.
    pub fn balanced_accuracy(&self) -> f64 {
        0.5 * (self.recall() + self.specificity())
    }

    /// Harmonic mean of precision and recall; 0 when there are no true
    /// positives.
    pub fn f1(&self) -> Result<f64> {
        f1(self)
    }

    /// `[[tp, fn], [fp, tn]]` divided by the row sums.
    pub fn rates(&self) -> [[f64; 2]; 2] {
        let pos = self.tp + self.fn_;
        let neg = self.fp + self.tn;
        [
            [ratio(self.tp, pos), ratio(self.fn_, pos)],
            [ratio(self.fp, neg), ratio(self.tn, neg)],
        ]
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion_binary(predictions: &[bool], labels: &[bool]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (l, p) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub fn f1(cm: &ConfusionMatrix) -> Result<f64> {
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    if denom == 0 {
        return Err(Error::invalid("confusion", "F1 undefined without positives"));
    }
    Ok(2.0 * cm.tp as f64 / denom as f64)
}

/// `k x k` counts; rows are actual classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulticlassConfusion {
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion_multiclass(model: &Model, dataset: &Dataset) -> Result<MulticlassConfusion> {
    let k = model.spec().num_classes;
    let mut counts = vec![vec![0u64; k]; k];
    for s in dataset.samples() {
        counts[s.label][model.predict(&s.features)?] += 1;
    }
    Ok(MulticlassConfusion { counts })
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("vector", "cosine similarity of a zero vector"));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("vector"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

pub fn mean_abs_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("vector"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Median; mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_acc: f64,
    pub validation_acc: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub points: Vec<CurvePoint>,
}

impl AccuracyCurve {
    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    /// `epoch,train,val` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train,val\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.epoch, p.train_acc, p.validation_acc);
        }
        out
    }
}

/// Train while recording train and validation accuracy after every epoch.
pub fn track_curve(
    model: &Model,
    train: &Dataset,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Model, AccuracyCurve)> {
    if validation.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut curve = AccuracyCurve::default();
    let trained = model.train_with_hook(train, cfg, |epoch, m| {
        curve.points.push(CurvePoint {
            epoch,
            train_acc: m.accuracy(train)?,
            validation_acc: m.accuracy(validation)?,
        });
        Ok(())
    })?;
    Ok((trained, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_table_anchors() {
        let cases = [
            ((1.00, 0.00, 0.31, 0.69), 0.866),
            ((0.44, 0.56, 0.26, 0.74), 0.518),
        ];
        for ((a, b, c, d), want) in cases {
            let cm = ConfusionMatrix::from_rates(a, b, c, d, 1000).unwrap();
            assert!((cm.f1().unwrap() - want).abs() < 1e-3, "{cm:?}");
        }
    }

    #[test]
    fn f1_edge_cases() {
        assert_eq!(f1(&ConfusionMatrix::new(5, 0, 0, 5)).unwrap(), 1.0);
        assert_eq!(f1(&ConfusionMatrix::new(0, 3, 2, 5)).unwrap(), 0.0);
        assert!(f1(&ConfusionMatrix::new(0, 0, 0, 9)).is_err());
        let a = ConfusionMatrix::new(7, 2, 5, 11);
        let b = ConfusionMatrix::new(7, 5, 2, 11);
        assert_eq!(f1(&a).unwrap(), f1(&b).unwrap());
        let scaled = ConfusionMatrix::new(21, 6, 15, 33);
        assert!((f1(&a).unwrap() - f1(&scaled).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn f1_depends_on_which_errors() {
        // precision and recall trade places, and tn never enters
        let a = ConfusionMatrix::new(7, 2, 5, 11);
        let swapped = ConfusionMatrix::new(7, 11, 2, 5);
        assert_ne!(f1(&a).unwrap(), f1(&swapped).unwrap());
    }

    #[test]
    fn confusion_counts() {
        let labels = [true, true, false, false];
        let cm = confusion_binary(&labels, &labels).unwrap();
        assert_eq!((cm.fn_, cm.fp), (0, 0));
        let cm = confusion_binary(&[true; 4], &labels).unwrap();
        assert_eq!((cm.fp, cm.tn), (2, 0));
        assert!(confusion_binary(&[true], &labels).is_err());
        assert!(confusion_binary(&[], &[]).is_err());
    }

    #[test]
    fn similarity_measures() {
        let a = [1.0, -2.0, 3.0];
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(cosine_similarity(&a, &[0.0; 3]).is_err());
        assert!(cosine_similarity(&a, &[1.0]).is_err());
        // reflection through the midpoint flips the centered vector
        let x = [12.0, 200.0, 90.0];
        let neg = crate::obfuscate::negative(&x, crate::Domain::PIXEL);
        let c1: Vec<f64> = x.iter().map(|v| v - 127.5).collect();
        let c2: Vec<f64> = neg.iter().map(|v| v - 127.5).collect();
        assert!((cosine_similarity(&c1, &c2).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(mse(&[1.0, 2.0], &[3.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
