mod common;

use std::collections::HashSet;

use modasm_core::sampling::{gaussian_weights, sampling_probabilities, weighted_draw_without_replacement};
use modasm_core::{canonicalize, sample_enumerate, SamplingParams};
use proptest::prelude::*;

#[test]
fn growth_to_twenty_with_five_hundred_per_level() {
    let params = SamplingParams::new(500, None, 11).unwrap();
    let levels = sample_enumerate(20, &params).unwrap();
    assert_eq!(levels.len(), 20);
    let exact = [1usize, 1, 2, 7, 24, 97, 401];
    for (i, level) in levels.iter().enumerate() {
        let n = i + 1;
        if n <= exact.len() {
            assert_eq!(level.len(), exact[i], "n = {n}");
        } else {
            assert_eq!(level.len(), 500, "n = {n}");
        }
        assert!(level.iter().all(|c| c.n() == n));
        let keys: HashSet<_> = level.iter().map(canonicalize).collect();
        assert_eq!(keys.len(), level.len(), "duplicates at n = {n}");
    }
    let again = sample_enumerate(20, &params).unwrap();
    assert_eq!(levels, again);
    let other = sample_enumerate(12, &SamplingParams::new(500, None, 12).unwrap()).unwrap();
    assert_ne!(levels[11], other[11]);
}

#[test]
fn weight_ratio_at_three_sigma() {
    for sigma in [0.1, 0.5, 2.0] {
        let w = gaussian_weights(&[1.0, 1.0 + 3.0 * sigma], sigma);
        assert!((w[1] / w[0] - (-4.5f64).exp()).abs() < 1e-12);
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(SamplingParams::new(0, None, 0).is_err());
    assert!(SamplingParams::new(5, Some(0.0), 0).is_err());
    assert!(sample_enumerate(0, &SamplingParams::new(5, None, 0).unwrap()).is_err());
}

#[test]
fn compact_configurations_are_preferred() {
    // seven-module level has 401 members; keeping 50 should lower the mean radius
    let full = sample_enumerate(7, &SamplingParams::new(1000, None, 0).unwrap()).unwrap();
    let kept = sample_enumerate(7, &SamplingParams::new(50, None, 0).unwrap()).unwrap();
    let mean = |cs: &[modasm_core::LatticeConfig]| cs.iter().map(modasm_core::radius_of_gyration).sum::<f64>() / cs.len() as f64;
    assert!(mean(&kept[6]) < mean(&full[6]));
}

proptest! {
    #[test]
    fn draws_are_distinct_and_sized(seed in any::<u64>(), len in 1usize..60, k in 0usize..80) {
        let mut rng = common::rng(seed);
        let weights: Vec<f64> = (0..len).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let picked = weighted_draw_without_replacement(&weights, k, &mut rng);
        prop_assert_eq!(picked.len(), k.min(len));
        let set: HashSet<_> = picked.iter().collect();
        prop_assert_eq!(set.len(), picked.len());
        prop_assert!(picked.iter().all(|&i| i < len));
    }

    #[test]
    fn probabilities_sum_to_one(g in proptest::collection::vec(0.0f64..5.0, 1..40), sigma in 0.05f64..3.0) {
        let p = sampling_probabilities(&g, sigma);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!(p.iter().copied().fold(0.0, f64::max) > 0.0);
    }
}
