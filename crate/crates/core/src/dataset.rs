//! Labeled datasets, the CSV/PGM formats, synthetic blob generators, and the
//! selections (sensitive samples, sensitive groups) the defenses act on.
//!
//! CSV layout: a header line `# name=<tag> d=<d> C=<C> domain=<lo>,<hi>`
//! followed by rows `label,f0,...,f(d-1)`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Declared value range of every feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const UNIT: Domain = Domain { lo: 0.0, hi: 1.0 };
    pub const PIXEL: Domain = Domain { lo: 0.0, hi: 255.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let d = Domain { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::invalid(
                "domain",
                format!("need finite lo < hi, got ({}, {})", self.lo, self.hi),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Linear map of `[lo, hi]` onto `[0, 1]`.
    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.lo) / self.width()
    }

    /// Reflection through the midpoint, `lo + hi - x` (`255 - x` for pixels).
    pub fn reflect(&self, x: f64) -> f64 {
        self.lo + self.hi - x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Sample { features, label }
    }
}

/// Labeled feature vectors over a declared domain. Construction validates the
/// invariants; there is no way to build an invalid dataset through the API.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    dim: usize,
    num_classes: usize,
    domain: Domain,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        num_classes: usize,
        domain: Domain,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if num_classes < 2 {
            return Err(Error::invalid("num_classes", "must be at least 2"));
        }
        domain.validate()?;
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.features.len(),
                }
                .context(format!("sample {i}")));
            }
            if s.label >= num_classes {
                return Err(Error::invalid(
                    format!("samples[{i}].label"),
                    format!("label {} out of range for {} classes", s.label, num_classes),
                ));
            }
            if let Some(x) = s.features.iter().find(|x| !domain.contains(**x)) {
                return Err(Error::invalid(
                    format!("samples[{i}].features"),
                    format!("value {x} outside domain [{}, {}]", domain.lo, domain.hi),
                ));
            }
        }
        Ok(Dataset {
            name: name.into(),
            dim,
            num_classes,
            domain,
            samples,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    /// A new dataset with the same metadata and different samples.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Result<Self> {
        Dataset::new(
            self.name.clone(),
            self.dim,
            self.num_classes,
            self.domain,
            samples,
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            let s = self
                .samples
                .get(i)
                .ok_or_else(|| Error::invalid("indices", format!("index {i} out of range")))?;
            out.push(s.clone());
        }
        Ok(Dataset {
            samples: out,
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Self {
        Dataset {
            name: self.name.clone(),
            dim: self.dim,
            num_classes: self.num_classes,
            domain: self.domain,
            samples: Vec::new(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Coordinate-wise mean of the features of class `class`.
    pub fn class_mean(&self, class: usize) -> Result<Vec<f64>> {
        if class >= self.num_classes {
            return Err(Error::invalid(
                "class",
                format!("{class} out of range for {} classes", self.num_classes),
            ));
        }
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for s in self.samples.iter().filter(|s| s.label == class) {
            for (acc, x) in sum.iter_mut().zip(&s.features) {
                *acc += x;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::Empty("class"));
        }
        let n = n as f64;
        Ok(sum.into_iter().map(|v| v / n).collect())
    }

    pub fn select_group(&self, spec: GroupSpec) -> Vec<usize> {
        match spec {
            GroupSpec::WholeDataset => (0..self.len()).collect(),
            GroupSpec::ByLabel(c) => self
                .samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.label == c)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Random disjoint partition: the first part holds `floor(fraction * N)`
    /// samples, the second the rest. Each part keeps the original order.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid("fraction", "must lie strictly between 0 and 1"));
        }
        let (a, b) = split_indices(self.len(), fraction, seed);
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid(
                "fraction",
                format!("split of {} samples leaves an empty side", self.len()),
            ));
        }
        Ok((self.subset(&a)?, self.subset(&b)?))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_csv(&text, &path.display().to_string())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# name={} d={} C={} domain={},{}\n",
            self.name, self.dim, self.num_classes, self.domain.lo, self.domain.hi
        );
        for s in &self.samples {
            let _ = write!(out, "{}", s.label);
            for x in &s.features {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed, "split", 0));
    let cut = ((fraction * n as f64) + 1e-9).floor() as usize;
    let mut a = idx[..cut.min(n)].to_vec();
    let mut b = idx[cut.min(n)..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Parse the CSV format. Header keys are `name`, `d`, `C` and `domain`; the
/// short form `# domain <lo> <hi>` is accepted as well. Missing `d` and `C`
/// are inferred from the rows.
pub fn parse_csv(text: &str, origin: &str) -> Result<Dataset> {
    let perr = |line: usize, reason: String| Error::Parse {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut name = String::from("dataset");
    let mut dim: Option<usize> = None;
    let mut classes: Option<usize> = None;
    let mut domain: Option<Domain> = None;
    let mut samples = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let toks: Vec<&str> = header.split_whitespace().collect();
            let mut i = 0;
            while i < toks.len() {
                let tok = toks[i];
                if let Some((k, v)) = tok.split_once('=') {
                    match k {
                        "name" => name = v.to_string(),
                        "d" => {
                            dim = Some(v.parse().map_err(|_| perr(line_no, format!("bad d `{v}`")))?)
                        }
                        "C" => {
                            classes =
                                Some(v.parse().map_err(|_| perr(line_no, format!("bad C `{v}`")))?)
                        }
                        "domain" => {
                            let (lo, hi) = v
                                .split_once(',')
                                .ok_or_else(|| perr(line_no, format!("bad domain `{v}`")))?;
                            domain = Some(parse_domain(lo, hi).map_err(|r| perr(line_no, r))?);
                        }
                        _ => {}
                    }
                } else if tok == "domain" && i + 2 < toks.len() {
                    domain = Some(parse_domain(toks[i + 1], toks[i + 2]).map_err(|r| perr(line_no, r))?);
                    i += 2;
                }
                i += 1;
            }
            continue;
        }
        let mut fields = line.split(',');
        let label_tok = fields.next().unwrap_or_default().trim();
        let label: usize = label_tok
            .parse()
            .map_err(|_| perr(line_no, format!("bad label `{label_tok}`")))?;
        let features = fields
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .map_err(|_| perr(line_no, format!("bad feature `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let expected = *dim.get_or_insert(features.len());
        if features.len() != expected {
            return Err(perr(
                line_no,
                format!("expected {expected} features, found {}", features.len()),
            ));
        }
        if let Some(c) = classes {
            if label >= c {
                return Err(perr(line_no, format!("label {label} out of range for C={c}")));
            }
        }
        samples.push(Sample::new(features, label));
    }

    let domain = domain.ok_or_else(|| perr(1, "missing `domain` header".into()))?;
    let dim = dim.ok_or_else(|| perr(1, "cannot determine feature dimension".into()))?;
    let classes = match classes {
        Some(c) => c,
        None => samples.iter().map(|s| s.label + 1).max().unwrap_or(2).max(2),
    };
    Dataset::new(name, dim, classes, domain, samples)
        .map_err(|e| e.context(format!("loading {origin}")))
}

fn parse_domain(lo: &str, hi: &str) -> std::result::Result<Domain, String> {
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad domain lo `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad domain hi `{hi}`"))?;
    Domain::new(lo, hi).map_err(|e| e.to_string())
}

/// Write one sample as a plain PGM (P2, maxval 255), rescaling the domain onto
/// 0..=255.
pub fn write_pgm(
    path: impl AsRef<Path>,
    features: &[f64],
    height: usize,
    width: usize,
    domain: Domain,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pgm_string(features, height, width, domain)?).map_err(|e| Error::io(path, e))
}

pub fn pgm_string(features: &[f64], height: usize, width: usize, domain: Domain) -> Result<String> {
    if height * width != features.len() {
        return Err(Error::DimensionMismatch {
            expected: height * width,
            found: features.len(),
        });
    }
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in features.chunks(width) {
        let line: Vec<String> = row
            .iter()
            .map(|&x| {
                let v = (domain.to_unit(domain.clip(x)) * 255.0).round() as u8;
                v.to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Indices of samples considered sensitive (d*).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveSelection {
    indices: BTreeSet<usize>,
}

impl SensitiveSelection {
    pub fn new(indices: impl IntoIterator<Item = usize>, dataset_len: usize) -> Result<Self> {
        let mut set = BTreeSet::new();
        for i in indices {
            if i >= dataset_len {
                return Err(Error::invalid(
                    "selection",
                    format!("index {i} out of range for {dataset_len} samples"),
                ));
            }
            if !set.insert(i) {
                return Err(Error::invalid("selection", format!("duplicate index {i}")));
            }
        }
        Ok(SensitiveSelection { indices: set })
    }

    pub fn all(dataset_len: usize) -> Self {
        SensitiveSelection {
            indices: (0..dataset_len).collect(),
        }
    }

    /// `floor(ratio * n)` indices chosen by a seeded permutation.
    pub fn random_fraction(dataset_len: usize, ratio: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::invalid("selection_ratio", "must lie in [0, 1]"));
        }
        let mut idx: Vec<usize> = (0..dataset_len).collect();
        idx.shuffle(&mut seed::rng(seed, "selection", 0));
        let k = ((ratio * dataset_len as f64) + 1e-9).floor() as usize;
        Ok(SensitiveSelection {
            indices: idx.into_iter().take(k).collect(),
        })
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.iter().next_back().copied()
    }
}

/// Common feature shared by a sensitive group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSpec {
    ByLabel(usize),
    WholeDataset,
}

impl GroupSpec {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        match *self {
            GroupSpec::ByLabel(c) if c >= num_classes => Err(Error::invalid(
                "group.by_label",
                format!("class {c} out of range for {num_classes} classes"),
            )),
            _ => Ok(()),
        }
    }
}

/// Mode centers of each class of a synthetic blob dataset. A class may have
/// more than one mode; samples are spread round-robin over the modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobCenters {
    pub domain: Domain,
    pub classes: Vec<Vec<Vec<f64>>>,
}

impl BlobCenters {
    /// One center per class, uniform in the domain.
    pub fn uniform(num_classes: usize, dim: usize, domain: Domain, seed: u64) -> Self {
        let mut rng = seed::rng(seed, "blob-centers", 0);
        let classes = (0..num_classes)
            .map(|_| vec![(0..dim).map(|_| rng.random_range(domain.lo..=domain.hi)).collect()])
            .collect();
        BlobCenters { domain, classes }
    }

    /// Class `k` sits at `mid + scales[k % len] * (hi - lo) / 2 * s_k` where
    /// `s_k` is a random sign vector.
    pub fn sign_pattern(
        num_classes: usize,
        dim: usize,
        scales: &[f64],
        domain: Domain,
        seed: u64,
    ) -> Self {
        let mut rng = seed::rng(seed, "blob-centers", 1);
        let half = 0.5 * domain.width();
        let classes = (0..num_classes)
            .map(|k| {
                let s = scales.get(k % scales.len().max(1)).copied().unwrap_or(0.5);
                vec![(0..dim)
                    .map(|_| {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        domain.clip(domain.midpoint() + s * half * sign)
                    })
                    .collect()]
            })
            .collect();
        BlobCenters { domain, classes }
    }

    /// Adds the reflection of every mode as an extra mode of the same class.
    pub fn mirrored(mut self) -> Self {
        let domain = self.domain;
        for modes in &mut self.classes {
            let reflected: Vec<Vec<f64>> = modes
                .iter()
                .map(|m| m.iter().map(|&x| domain.reflect(x)).collect())
                .collect();
            modes.extend(reflected);
        }
        self
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.classes
            .first()
            .and_then(|m| m.first())
            .map_or(0, Vec::len)
    }

    /// Draw `per_class` points per class around the centers with isotropic
    /// Gaussian spread, clipped to the domain and optionally rounded to
    /// integers (pixel semantics).
    pub fn sample(
        &self,
        name: &str,
        per_class: usize,
        spread: f64,
        round: bool,
        seed: u64,
    ) -> Result<Dataset> {
        if !(spread >= 0.0 && spread.is_finite()) {
            return Err(Error::invalid("spread", "must be finite and >= 0"));
        }
        let normal = Normal::new(0.0, spread).map_err(|e| Error::invalid("spread", e.to_string()))?;
        let domain = self.domain;
        let mut samples = Vec::with_capacity(per_class * self.classes.len());
        for (label, modes) in self.classes.iter().enumerate() {
            let mut rng = seed::rng(seed, "blob-samples", label as u64);
            for i in 0..per_class {
                let center = &modes[i % modes.len()];
                let features = center
                    .iter()
                    .map(|&c| {
                        let v = domain.clip(c + normal.sample(&mut rng));
                        if round {
                            domain.clip(v.round())
                        } else {
                            v
                        }
                    })
                    .collect();
                samples.push(Sample::new(features, label));
            }
        }
        Dataset::new(name, self.dim(), self.num_classes(), domain, samples)
    }
}

/// Gaussian blobs around uniformly drawn class centers.
#[allow(clippy::too_many_arguments)]
pub fn gen_blobs(
    num_classes: usize,
    dim: usize,
    per_class: usize,
    centers_seed: u64,
    sample_seed: u64,
    spread: f64,
    domain: Domain,
) -> Result<Dataset> {
    if num_classes < 2 || dim == 0 {
        return Err(Error::invalid("blobs", "need at least 2 classes and 1 dimension"));
    }
    domain.validate()?;
    BlobCenters::uniform(num_classes, dim, domain, centers_seed).sample(
        "blobs",
        per_class,
        spread,
        false,
        sample_seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            "t",
            2,
            3,
            Domain::PIXEL,
            vec![
                Sample::new(vec![0.0, 10.0], 0),
                Sample::new(vec![255.0, 3.5], 1),
                Sample::new(vec![7.25, 100.0], 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_datasets() {
        let d = Domain::PIXEL;
        assert!(Dataset::new("x", 2, 2, d, vec![Sample::new(vec![1.0], 0)]).is_err());
        assert!(Dataset::new("x", 1, 2, d, vec![Sample::new(vec![1.0], 2)]).is_err());
        assert!(Dataset::new("x", 1, 2, d, vec![Sample::new(vec![256.0], 0)]).is_err());
        assert!(Dataset::new("x", 1, 1, d, vec![]).is_err());
        assert!(Domain::new(1.0, 1.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let ds = tiny();
        let text = ds.to_csv_string();
        assert!(text.starts_with("# name=t d=2 C=3 domain=0,255\n"));
        assert_eq!(parse_csv(&text, "mem").unwrap(), ds);
    }

    #[test]
    fn csv_short_domain_header() {
        let ds = parse_csv("# domain 0 255\n0,1,2\n1,3,4\n", "mem").unwrap();
        assert_eq!(ds.domain(), Domain::new(0.0, 255.0).unwrap());
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.num_classes(), 2);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let err = parse_csv("# d=4 C=2 domain=0,255\n0,1,2,3,4\n1,1,2,3\n", "f.csv").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_csv("# d=1 C=2 domain=0,255\n2,1\n", "f.csv").is_err());
        assert!(parse_csv("# d=1 C=2 domain=0,255\n0,abc\n", "f.csv").is_err());
        assert!(parse_csv("0,1\n", "f.csv").is_err());
    }

    #[test]
    fn split_is_partition() {
        let ds = gen_blobs(2, 3, 50, 1, 2, 5.0, Domain::PIXEL).unwrap();
        let (a, b) = ds.split(0.5, 9).unwrap();
        assert_eq!((a.len(), b.len()), (50, 50));
        let (ia, ib) = split_indices(100, 0.5, 9);
        let mut all: Vec<usize> = ia.iter().chain(&ib).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let mut merged: Vec<_> = a.samples().iter().chain(b.samples()).cloned().collect();
        let mut orig = ds.samples().to_vec();
        let key = |s: &Sample| format!("{:?}", s);
        merged.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(merged, orig);
    }

    #[test]
    fn split_seeds_differ() {
        let (a1, _) = split_indices(40, 0.5, 1);
        let (a2, _) = split_indices(40, 0.5, 2);
        assert_ne!(a1, a2);
    }

    #[test]
    fn split_rejects_degenerate() {
        let ds = tiny();
        assert!(ds.split(0.0, 1).is_err());
        assert!(ds.split(1.0, 1).is_err());
        assert!(ds.split(0.1, 1).is_err());
    }

    #[test]
    fn select_group_partitions() {
        let ds = gen_blobs(4, 3, 7, 1, 2, 5.0, Domain::PIXEL).unwrap();
        assert_eq!(ds.select_group(GroupSpec::WholeDataset), (0..28).collect::<Vec<_>>());
        let total: usize = (0..4)
            .map(|c| {
                let idx = ds.select_group(GroupSpec::ByLabel(c));
                assert!(idx.iter().all(|&i| ds.samples()[i].label == c));
                idx.len()
            })
            .sum();
        assert_eq!(total, 28);
        assert!(tiny().select_group(GroupSpec::ByLabel(2)).is_empty());
    }

    #[test]
    fn class_mean_cases() {
        let ds = tiny();
        assert_eq!(ds.class_mean(1).unwrap(), vec![255.0, 3.5]);
        assert!(matches!(ds.class_mean(2), Err(Error::Empty(_))));
        let sym = Dataset::new(
            "s",
            2,
            2,
            Domain::PIXEL,
            vec![
                Sample::new(vec![10.0, 200.0], 0),
                Sample::new(vec![245.0, 55.0], 0),
            ],
        )
        .unwrap();
        assert_eq!(sym.class_mean(0).unwrap(), vec![127.5, 127.5]);
    }

    #[test]
    fn blobs_degenerate_cases() {
        let empty = gen_blobs(3, 4, 0, 1, 1, 5.0, Domain::PIXEL).unwrap();
        assert!(empty.is_empty());
        let centers = BlobCenters::uniform(3, 4, Domain::PIXEL, 11);
        let ds = centers.sample("b", 5, 0.0, false, 2).unwrap();
        for s in ds.samples() {
            assert_eq!(s.features, centers.classes[s.label][0]);
        }
        assert_eq!(
            gen_blobs(3, 4, 5, 1, 2, 9.0, Domain::PIXEL).unwrap(),
            gen_blobs(3, 4, 5, 1, 2, 9.0, Domain::PIXEL).unwrap()
        );
    }

    #[test]
    fn pgm_layout() {
        let pgm = pgm_string(&[0.0, 255.0, 127.5, 64.0], 2, 2, Domain::PIXEL).unwrap();
        assert_eq!(pgm, "P2\n2 2\n255\n0 255\n128 64\n");
        assert!(pgm_string(&[0.0; 3], 2, 2, Domain::PIXEL).is_err());
    }

    #[test]
    fn selection_validation() {
        assert!(SensitiveSelection::new([0, 5], 5).is_err());
        assert!(SensitiveSelection::new([1, 1], 5).is_err());
        let s = SensitiveSelection::random_fraction(10, 0.3, 4).unwrap();
        assert_eq!(s.len(), 3);
    }
}
