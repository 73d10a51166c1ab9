mod support;

use mcc_core::metrics::{ari, clustering_accuracy, nmi, nmi_from_table, ContingencyTable};
use mcc_core::rng::rng_for;
use proptest::prelude::*;
use rand::Rng;
use support::oracles::{brute_force_accuracy, pair_counting_ari};

/// Expands a table (rows predicted, columns true) into label vectors.
fn labels(table: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let (mut p, mut t) = (Vec::new(), Vec::new());
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            for _ in 0..c {
                p.push(i);
                t.push(j);
            }
        }
    }
    (p, t)
}

// reference values from scikit-learn 1.x (normalized_mutual_info_score
// with the geometric average, adjusted_rand_score)
const PINNED: [(&[&[u64]], f64, f64); 3] = [
    (&[&[5, 1], &[1, 5]], 0.3499775783516458, 0.3888888888888889),
    (&[&[3, 1, 0], &[0, 4, 2], &[1, 0, 5]], 0.4860884841974531, 0.35039370078740156),
    (&[&[10, 0], &[0, 10], &[5, 5]], 0.529540578057562, 0.41767068273092367),
];

#[test]
fn pinned_reference_scores() {
    for (table, want_nmi, want_ari) in PINNED {
        let table: Vec<Vec<u64>> = table.iter().map(|r| r.to_vec()).collect();
        let (p, t) = labels(&table);
        assert!((nmi(&p, &t).unwrap() - want_nmi).abs() < 1e-9);
        assert!((nmi_from_table(&ContingencyTable::from_counts(table).unwrap()) - want_nmi).abs() < 1e-9);
        assert!((ari(&p, &t).unwrap() - want_ari).abs() < 1e-9);
    }
}

#[test]
fn accuracy_matches_exhaustive_search() {
    let mut rng = rng_for(5, 0);
    for _ in 0..100 {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=40);
        let p: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let t: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let fast = clustering_accuracy(&p, &t).unwrap();
        assert!((fast - brute_force_accuracy(&p, &t, k)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn ari_matches_pair_counting(labels in prop::collection::vec((0usize..4, 0usize..4), 2..60)) {
        let (p, t): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        prop_assert!((ari(&p, &t).unwrap() - pair_counting_ari(&p, &t)).abs() < 1e-10);
    }

    #[test]
    fn scores_ignore_label_names(labels in prop::collection::vec((0usize..4, 0usize..4), 2..60), shift in 1usize..4) {
        let (p, t): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        let renamed: Vec<usize> = p.iter().map(|&x| (x + shift) % 4).collect();
        prop_assert!((clustering_accuracy(&p, &t).unwrap() - clustering_accuracy(&renamed, &t).unwrap()).abs() < 1e-12);
        prop_assert!((nmi(&p, &t).unwrap() - nmi(&renamed, &t).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&p, &t).unwrap() - ari(&renamed, &t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nmi_lies_in_unit_interval(labels in prop::collection::vec((0usize..5, 0usize..5), 1..60)) {
        let (p, t): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        let v = nmi(&p, &t).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }
}
