use obfuskit::obfuscate::{
    negative, obfuscate_dataset_groups, obfuscate_dataset_individual_traced, GroupParams, IndividualParams,
};
use obfuskit::{Dataset, Domain, GroupSpec, Sample, SensitiveSelection};
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..6, 2usize..4, -50.0f64..50.0, 1.0f64..300.0).prop_flat_map(|(dim, classes, lo, width)| {
        let hi = lo + width;
        let sample = (prop::collection::vec(lo..=hi, dim), 0..classes).prop_map(|(f, y)| Sample::new(f, y));
        prop::collection::vec(sample, 1..30).prop_map(move |samples| {
            Dataset::new("prop", dim, classes, Domain::new(lo, hi).unwrap(), samples).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn individual_noise_stays_in_domain_and_touches_only_selected(
        data in dataset_strategy(),
        coord_ratio in 0.0f64..=1.0,
        sigma in 0.0f64..500.0,
        sel_ratio in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let sel = SensitiveSelection::random_fraction(data.len(), sel_ratio, seed).unwrap();
        let params = IndividualParams::new(coord_ratio, sigma).unwrap();
        let out = obfuscate_dataset_individual_traced(&data, &sel, &params, seed).unwrap();
        prop_assert_eq!(out.dataset.len(), data.len());
        let domain = data.domain();
        for (i, (a, b)) in data.samples().iter().zip(out.dataset.samples()).enumerate() {
            prop_assert_eq!(a.label, b.label);
            prop_assert!(b.features.iter().all(|&x| domain.contains(x)));
            let coords = out.noised.iter().find(|(j, _)| *j == i).map(|(_, c)| c.clone()).unwrap_or_default();
            if !sel.contains(i) {
                prop_assert!(coords.is_empty());
            } else if sigma > 0.0 {
                prop_assert_eq!(coords.len(), params.coords_for(data.dim()));
            }
            for j in 0..data.dim() {
                if !coords.contains(&j) {
                    prop_assert_eq!(a.features[j].to_bits(), b.features[j].to_bits());
                }
            }
        }
    }

    #[test]
    fn group_augmentation_counts_and_domain(
        data in dataset_strategy(),
        aug_ratio in 0.0f64..3.0,
        sigma in 0.0f64..100.0,
        seed in any::<u64>(),
    ) {
        let params = GroupParams::new(aug_ratio, sigma).unwrap();
        let out = obfuscate_dataset_groups(&data, &[GroupSpec::WholeDataset], &params, seed).unwrap();
        prop_assert_eq!(out.len(), data.len() + params.additions_for(data.len()));
        prop_assert_eq!(&out.samples()[..data.len()], data.samples());
        let domain = data.domain();
        prop_assert!(out.samples().iter().all(|s| s.features.iter().all(|&x| domain.contains(x))));
    }

    #[test]
    fn negative_reflects_about_the_midpoint(data in dataset_strategy()) {
        let domain = data.domain();
        let tol = 4.0 * f64::EPSILON * (domain.width() + domain.midpoint().abs());
        for s in data.samples() {
            let n = negative(&s.features, domain);
            for (x, y) in s.features.iter().zip(&n) {
                prop_assert!(((x + y) / 2.0 - domain.midpoint()).abs() <= tol);
            }
            let back = negative(&n, domain);
            for (x, y) in s.features.iter().zip(&back) {
                prop_assert!((x - y).abs() <= tol);
            }
        }
    }

    #[test]
    fn full_noiseless_augmentation_centres_the_group(data in dataset_strategy(), seed in any::<u64>()) {
        let params = GroupParams::new(1.0, 0.0).unwrap();
        let out = obfuscate_dataset_groups(&data, &[GroupSpec::WholeDataset], &params, seed).unwrap();
        let domain = data.domain();
        let tol = 1e-9 * (domain.width() + domain.midpoint().abs());
        for j in 0..data.dim() {
            let mean = out.samples().iter().map(|s| s.features[j]).sum::<f64>() / out.len() as f64;
            prop_assert!((mean - domain.midpoint()).abs() <= tol);
        }
    }
}
