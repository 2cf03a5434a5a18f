//! The customer-side obfuscation transforms.
//!
//! * Individual samples: a ratio `r` of coordinates of each sensitive sample
//!   gets i.i.d. Gaussian noise, labels untouched.
//! * Groups: `floor(r * |g|)` synthetic samples are appended to each sensitive
//!   group, each the reflection of a group member through the domain midpoint
//!   plus small Gaussian noise.
//!
//! Every output is clipped back into the dataset domain.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Domain, GroupSpec, Sample, SensitiveSelection};
use crate::error::{Error, Result};
use crate::seed::{self, StageRng};

// Guards the rounding of r * n against representation error (0.1 * 30).
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndividualParams {
    /// Fraction of coordinates that receive noise.
    pub coord_ratio: f64,
    /// Standard deviation of the noise, in raw feature units.
    pub sigma: f64,
}

impl IndividualParams {
    pub fn new(coord_ratio: f64, sigma: f64) -> Result<Self> {
        let p = IndividualParams { coord_ratio, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.coord_ratio) {
            return Err(Error::invalid("coord_ratio", "must lie in [0, 1]"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `ceil(coord_ratio * dim)`.
    pub fn coords_for(&self, dim: usize) -> usize {
        let raw = self.coord_ratio * dim as f64 - ROUNDING_SLACK;
        (raw.ceil().max(0.0) as usize).min(dim)
    }

    fn is_noop(&self) -> bool {
        self.coord_ratio == 0.0 || self.sigma == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupParams {
    /// Number of added samples relative to the group size.
    pub aug_ratio: f64,
    /// Standard deviation of the noise added to each negative.
    #[serde(default = "GroupParams::default_sigma")]
    pub sigma: f64,
}

impl GroupParams {
    /// Default noise on negatives for a 0..255 domain.
    pub const DEFAULT_SIGMA: f64 = 5.0;

    fn default_sigma() -> f64 {
        Self::DEFAULT_SIGMA
    }

    pub fn new(aug_ratio: f64, sigma: f64) -> Result<Self> {
        let p = GroupParams { aug_ratio, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aug_ratio >= 0.0 && self.aug_ratio.is_finite()) {
            return Err(Error::invalid("aug_ratio", "must be finite and >= 0"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `floor(aug_ratio * group_len)`.
    pub fn additions_for(&self, group_len: usize) -> usize {
        (self.aug_ratio * group_len as f64 + ROUNDING_SLACK).floor() as usize
    }
}

/// Noise a sample's features. Returns the new features and the (sorted)
/// coordinates that were selected for noise.
pub fn obfuscate_individual_traced(
    features: &[f64],
    domain: Domain,
    params: &IndividualParams,
    rng: &mut StageRng,
) -> (Vec<f64>, Vec<usize>) {
    if params.is_noop() {
        return (features.to_vec(), Vec::new());
    }
    let k = params.coords_for(features.len());
    let mut coords = index::sample(rng, features.len(), k).into_vec();
    coords.sort_unstable();
    let normal = Normal::new(0.0, params.sigma).expect("sigma validated");
    let mut out = features.to_vec();
    for &j in &coords {
        out[j] = domain.clip(out[j] + normal.sample(rng));
    }
    (out, coords)
}

pub fn obfuscate_individual_sample(
    sample: &Sample,
    domain: Domain,
    params: &IndividualParams,
    rng: &mut StageRng,
) -> Sample {
    let (features, _) = obfuscate_individual_traced(&sample.features, domain, params, rng);
    Sample::new(features, sample.label)
}

/// Result of obfuscating the sensitive samples of a dataset.
#[derive(Clone, Debug)]
pub struct IndividualOutcome {
    pub dataset: Dataset,
    /// Noised coordinates for every selected sample index.
    pub noised: Vec<(usize, Vec<usize>)>,
}

/// Replace every selected sample in place by its noised version. The noise
/// stream of sample `i` depends only on `(seed, i)`.
pub fn obfuscate_dataset_individual_traced(
    dataset: &Dataset,
    selection: &SensitiveSelection,
    params: &IndividualParams,
    seed: u64,
) -> Result<IndividualOutcome> {
    params.validate()?;
    if let Some(max) = selection.max_index() {
        if max >= dataset.len() {
            return Err(Error::invalid(
                "selection",
                format!("index {max} out of range for {} samples", dataset.len()),
            ));
        }
    }
    let domain = dataset.domain();
    let mut samples = dataset.samples().to_vec();
    let mut noised = Vec::with_capacity(selection.len());
    for i in selection.iter() {
        let mut rng = seed::rng(seed, "individual", i as u64);
        let (features, coords) = obfuscate_individual_traced(&samples[i].features, domain, params, &mut rng);
        samples[i].features = features;
        noised.push((i, coords));
    }
    Ok(IndividualOutcome {
        dataset: dataset.with_samples(samples)?,
        noised,
    })
}

pub fn obfuscate_dataset_individual(
    dataset: &Dataset,
    selection: &SensitiveSelection,
    params: &IndividualParams,
    seed: u64,
) -> Result<Dataset> {
    Ok(obfuscate_dataset_individual_traced(dataset, selection, params, seed)?.dataset)
}

/// Coordinate-wise `lo + hi - x`.
pub fn negative(features: &[f64], domain: Domain) -> Vec<f64> {
    features.iter().map(|&x| domain.reflect(x)).collect()
}

/// Augment one group with negated, noised copies of its members. Sources are
/// drawn without replacement until the group is exhausted, then with
/// replacement. Returns the original samples followed by the new ones.
pub fn obfuscate_group(
    group: &[Sample],
    spec: GroupSpec,
    domain: Domain,
    params: &GroupParams,
    rng: &mut StageRng,
) -> Result<Vec<Sample>> {
    params.validate()?;
    if group.is_empty() {
        return Err(Error::Empty("group"));
    }
    if let GroupSpec::ByLabel(c) = spec {
        if let Some(s) = group.iter().find(|s| s.label != c) {
            return Err(Error::invalid(
                "group",
                format!("sample with label {} in group for class {c}", s.label),
            ));
        }
    }
    let additions = params.additions_for(group.len());
    let mut out = group.to_vec();
    if additions == 0 {
        return Ok(out);
    }
    let mut order: Vec<usize> = (0..group.len()).collect();
    order.shuffle(rng);
    let noise = Normal::new(0.0, params.sigma).expect("sigma validated");
    for i in 0..additions {
        let src = match order.get(i) {
            Some(&j) => j,
            None => rng.random_range(0..group.len()),
        };
        let source = &group[src];
        let features = source
            .features
            .iter()
            .map(|&x| {
                let n = if params.sigma > 0.0 { noise.sample(rng) } else { 0.0 };
                domain.clip(domain.reflect(x) + n)
            })
            .collect();
        let label = match spec {
            GroupSpec::ByLabel(c) => c,
            GroupSpec::WholeDataset => source.label,
        };
        out.push(Sample::new(features, label));
    }
    Ok(out)
}

/// Apply [`obfuscate_group`] to every listed group. Existing samples keep
/// their positions; new samples are appended group by group. Groups are
/// selected on the original dataset.
pub fn obfuscate_dataset_groups(
    dataset: &Dataset,
    groups: &[GroupSpec],
    params: &GroupParams,
    seed: u64,
) -> Result<Dataset> {
    params.validate()?;
    let mut seen = HashSet::new();
    for g in groups {
        g.validate(dataset.num_classes())?;
        if let GroupSpec::ByLabel(c) = g {
            if !seen.insert(*c) {
                return Err(Error::invalid(
                    "groups",
                    format!("class {c} listed more than once"),
                ));
            }
        }
    }
    let mut samples = dataset.samples().to_vec();
    for (gi, spec) in groups.iter().enumerate() {
        let members: Vec<Sample> = dataset
            .select_group(*spec)
            .into_iter()
            .map(|i| dataset.samples()[i].clone())
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut rng = seed::rng(seed, "group", gi as u64);
        let augmented = obfuscate_group(&members, *spec, dataset.domain(), params, &mut rng)?;
        samples.extend(augmented.into_iter().skip(members.len()));
    }
    dataset.with_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_blobs;

    fn blobs() -> Dataset {
        gen_blobs(3, 12, 10, 4, 5, 40.0, Domain::PIXEL).unwrap()
    }

    #[test]
    fn negative_examples() {
        assert_eq!(negative(&[255.0, 100.0, 0.0], Domain::PIXEL), vec![0.0, 155.0, 255.0]);
        let d = Domain::new(-1.0, 3.0).unwrap();
        assert_eq!(negative(&[-1.0, 0.5], d), vec![3.0, 1.5]);
    }

    #[test]
    fn individual_noop_params() {
        let ds = blobs();
        let all = SensitiveSelection::all(ds.len());
        for p in [IndividualParams::new(0.0, 75.0).unwrap(), IndividualParams::new(0.5, 0.0).unwrap()] {
            assert_eq!(obfuscate_dataset_individual(&ds, &all, &p, 1).unwrap(), ds);
        }
        let p = IndividualParams::new(0.5, 50.0).unwrap();
        assert_eq!(
            obfuscate_dataset_individual(&ds, &SensitiveSelection::default(), &p, 1).unwrap(),
            ds
        );
    }

    #[test]
    fn individual_changes_only_selected() {
        let ds = blobs();
        let sel = SensitiveSelection::new([1, 4, 9], ds.len()).unwrap();
        let p = IndividualParams::new(1.0 / 3.0, 75.0).unwrap();
        let out = obfuscate_dataset_individual_traced(&ds, &sel, &p, 3).unwrap();
        assert_eq!(out.dataset.len(), ds.len());
        for (i, (a, b)) in ds.samples().iter().zip(out.dataset.samples()).enumerate() {
            assert_eq!(a.label, b.label);
            if !sel.contains(i) {
                assert_eq!(a, b);
            }
        }
        for (i, coords) in &out.noised {
            assert_eq!(coords.len(), 4); // ceil(12 / 3)
            let a = &ds.samples()[*i].features;
            let b = &out.dataset.samples()[*i].features;
            for j in 0..12 {
                if !coords.contains(&j) {
                    assert_eq!(a[j], b[j]);
                }
            }
        }
        assert_eq!(
            obfuscate_dataset_individual(&ds, &sel, &p, 3).unwrap(),
            out.dataset
        );
    }

    #[test]
    fn coordinate_counts_round_up() {
        let p = IndividualParams::new(1.0 / 3.0, 1.0).unwrap();
        assert_eq!(p.coords_for(64), 22);
        assert_eq!(p.coords_for(3), 1);
        assert_eq!(IndividualParams::new(0.1, 1.0).unwrap().coords_for(30), 3);
        assert_eq!(IndividualParams::new(0.01, 1.0).unwrap().coords_for(5), 1);
    }

    #[test]
    fn invalid_params() {
        assert!(IndividualParams::new(1.5, 1.0).is_err());
        assert!(IndividualParams::new(0.5, -1.0).is_err());
        assert!(GroupParams::new(-0.1, 1.0).is_err());
        let ds = blobs();
        let sel = SensitiveSelection::new([0], 1).unwrap();
        let bad = ds.subset(&[]).unwrap();
        assert!(obfuscate_dataset_individual(&bad, &sel, &IndividualParams::new(0.5, 1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn group_sizes_and_labels() {
        let ds = blobs();
        let p = GroupParams::new(1.0, 5.0).unwrap();
        let out = obfuscate_dataset_groups(&ds, &[GroupSpec::WholeDataset], &p, 2).unwrap();
        assert_eq!(out.len(), 2 * ds.len());
        assert_eq!(&out.samples()[..ds.len()], ds.samples());
        assert_eq!(out.class_counts(), vec![20, 20, 20]);

        let half = GroupParams::new(0.5, 5.0).unwrap();
        let out = obfuscate_dataset_groups(&ds, &[GroupSpec::ByLabel(1)], &half, 2).unwrap();
        assert_eq!(out.class_counts(), vec![10, 15, 10]);
        assert!(out.samples()[ds.len()..].iter().all(|s| s.label == 1));

        assert_eq!(obfuscate_dataset_groups(&ds, &[], &p, 2).unwrap(), ds);
        assert!(obfuscate_dataset_groups(&ds, &[GroupSpec::ByLabel(0), GroupSpec::ByLabel(0)], &p, 2).is_err());
        assert!(obfuscate_dataset_groups(&ds, &[GroupSpec::ByLabel(3)], &p, 2).is_err());
    }

    #[test]
    fn group_midpoint_collapse() {
        let ds = blobs();
        let p = GroupParams::new(1.0, 0.0).unwrap();
        let members: Vec<Sample> = ds.samples().iter().filter(|s| s.label == 2).cloned().collect();
        let mut rng = seed::rng(1, "t", 0);
        let g = obfuscate_group(&members, GroupSpec::ByLabel(2), ds.domain(), &p, &mut rng).unwrap();
        assert_eq!(g.len(), 20);
        for j in 0..ds.dim() {
            let mean = g.iter().map(|s| s.features[j]).sum::<f64>() / g.len() as f64;
            assert!((mean - 127.5).abs() < 1e-12);
        }
    }

    #[test]
    fn group_with_replacement_beyond_supply() {
        let ds = crate::dataset::BlobCenters::uniform(3, 12, Domain::PIXEL, 4)
            .sample("b", 10, 40.0, true, 5)
            .unwrap();
        let members: Vec<Sample> = ds.samples()[..10].to_vec();
        let p = GroupParams::new(2.5, 0.0).unwrap();
        let mut rng = seed::rng(1, "t", 0);
        let g = obfuscate_group(&members, GroupSpec::ByLabel(0), ds.domain(), &p, &mut rng).unwrap();
        assert_eq!(g.len(), 35);
        // the first |g| additions use every member exactly once
        let mut firsts: Vec<Vec<f64>> = g[10..20].iter().map(|s| negative(&s.features, ds.domain())).collect();
        let mut orig: Vec<Vec<f64>> = members.iter().map(|s| s.features.clone()).collect();
        let key = |v: &Vec<f64>| format!("{v:?}");
        firsts.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(firsts, orig);
    }

    #[test]
    fn group_rejects_mixed_labels_and_empty() {
        let ds = blobs();
        let p = GroupParams::new(1.0, 0.0).unwrap();
        let mut rng = seed::rng(1, "t", 0);
        assert!(obfuscate_group(&[], GroupSpec::WholeDataset, ds.domain(), &p, &mut rng).is_err());
        assert!(obfuscate_group(ds.samples(), GroupSpec::ByLabel(0), ds.domain(), &p, &mut rng).is_err());
    }
}
