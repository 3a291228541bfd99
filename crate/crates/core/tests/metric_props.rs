mod common;

use std::collections::BTreeSet;

use common::*;
use grpsparse::metrics::{accuracy, auc, max_cc, mean_pairwise_jaccard, DecisionRule};
use grpsparse::Matrix;
use proptest::prelude::*;
use rand::Rng;

/// Scores drawn from a small grid so that ties are common.
fn tied_scores(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| f64::from(r.gen_range(0..6)) / 4.0).collect()
}

fn binary_labels(r: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut y = random_labels(r, n, 2);
    y[0] = 0;
    y[1] = 1;
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_and_max_cc_match_enumeration(seed in any::<u64>(), n in 2usize..30, ties in any::<bool>()) {
        let mut r = rng(seed);
        let y = binary_labels(&mut r, n);
        let s: Vec<f64> = if ties { tied_scores(&mut r, n) } else { (0..n).map(|_| r.gen::<f64>()).collect() };
        prop_assert!((auc(&s, &y).unwrap() - brute_auc(&s, &y)).abs() <= 1e-12);
        prop_assert!((max_cc(&s, &y).unwrap() - brute_max_cc(&s, &y)).abs() <= 1e-12);
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps(seed in any::<u64>(), n in 2usize..30) {
        let mut r = rng(seed);
        let y = binary_labels(&mut r, n);
        let s = tied_scores(&mut r, n);
        let mapped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp()).collect();
        prop_assert_eq!(auc(&s, &y).unwrap(), auc(&mapped, &y).unwrap());
        prop_assert!((max_cc(&s, &y).unwrap() - max_cc(&mapped, &y).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn argmax_accuracy_matches_enumeration(seed in any::<u64>(), n in 1usize..30, c in 1usize..5) {
        let mut r = rng(seed);
        let data: Vec<f64> = (0..n * c).map(|_| f64::from(r.gen_range(0..3))).collect();
        let scores = Matrix::from_vec(n, c, data).unwrap();
        let y = random_labels(&mut r, n, c);
        prop_assert_eq!(accuracy(&scores, &y, DecisionRule::Argmax).unwrap(), brute_argmax_accuracy(&scores, &y));
    }

    #[test]
    fn jaccard_matches_enumeration(seed in any::<u64>(), m in 2usize..8) {
        let mut r = rng(seed);
        let sets: Vec<BTreeSet<usize>> = (0..m)
            .map(|_| (0..6).filter(|_| r.gen_bool(0.4)).collect())
            .collect();
        prop_assert_eq!(mean_pairwise_jaccard(&sets).unwrap(), brute_jaccard(&sets));
    }
}

#[test]
fn metrics_reject_degenerate_input() {
    assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
    assert!(max_cc(&[0.1], &[0, 1]).is_err());
    assert!(mean_pairwise_jaccard(&[BTreeSet::new()]).is_err());
}
