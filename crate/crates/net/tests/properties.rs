use doa_core::array::GridSpec;
use doa_net::layers::{bce_with_logits, sigmoid};
use doa_net::train::{batches, split_indices};
use doa_net::{threshold_from_probs, topk_from_probs};
use proptest::prelude::*;

proptest! {
    #[test]
    fn topk_has_exactly_k_angles(probs in prop::collection::vec(0.0f64..1.0, 9), k in 1usize..=9) {
        let grid = GridSpec::new(4, 5.0).unwrap();
        let est = topk_from_probs(&grid, &probs, k).unwrap();
        prop_assert_eq!(est.len(), k);
        // Every unselected probability is at most every selected one.
        let chosen: Vec<usize> = est.angles_deg().iter().map(|a| grid.nearest_index(*a)).collect();
        let min_in = chosen.iter().map(|&i| probs[i]).fold(f64::INFINITY, f64::min);
        prop_assert!((0..9).filter(|i| !chosen.contains(i)).all(|i| probs[i] <= min_in));
    }

    #[test]
    fn threshold_sets_are_nested(probs in prop::collection::vec(0.0f64..1.0, 9), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let grid = GridSpec::new(4, 5.0).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let big = threshold_from_probs(&grid, &probs, lo).unwrap();
        let small = threshold_from_probs(&grid, &probs, hi).unwrap();
        prop_assert!(small.angles_deg().iter().all(|x| big.angles_deg().contains(x)));
    }

    #[test]
    fn cross_entropy_is_non_negative_and_gradient_bounded(x in prop::collection::vec(-50.0f64..50.0, 1..20), bits in prop::collection::vec(any::<bool>(), 20)) {
        let z: Vec<f64> = x.iter().zip(&bits).map(|(_, &b)| f64::from(u8::from(b))).collect();
        let (loss, grad) = bce_with_logits(&x, &z).unwrap();
        prop_assert!(loss >= 0.0);
        for ((g, xi), zi) in grad.iter().zip(&x).zip(&z) {
            prop_assert!((g - (sigmoid(*xi) - zi)).abs() < 1e-15);
            prop_assert!(g.abs() <= 1.0);
        }
    }

    #[test]
    fn split_partitions_indices(len in 2usize..500, frac in 0.0f64..0.9, seed in any::<u64>()) {
        let (train, val) = split_indices(len, frac, seed);
        prop_assert!(train.len() >= 2);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..len).collect::<Vec<_>>());
    }

    #[test]
    fn batches_cover_order_without_singletons(len in 2usize..300, size in 2usize..64) {
        let order: Vec<usize> = (0..len).rev().collect();
        let b = batches(&order, size);
        prop_assert!(b.iter().all(|x| x.len() >= 2));
        prop_assert_eq!(b.concat(), order);
    }
}
