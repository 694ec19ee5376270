mod common;

use std::sync::Arc;

use common::*;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbantactic::cooccur::*;
use urbantactic::ingest::{Vocabulary, PERSON};

fn all_classes(m: &CooccurrenceMatrix, anchor: &str, mode: NormMode) -> Vec<String> {
    m.top_k(anchor, m.n(), mode, &[]).unwrap().entries.into_iter().map(|e| e.class).collect()
}

#[test]
fn reference_rankings() {
    let m = reference_matrix();
    for (anchor, expected) in REFERENCE_RANKINGS {
        for mode in [NormMode::Conditional, NormMode::RowSum] {
            let got = m.top_k(anchor, 5, mode, &[PERSON]).unwrap();
            assert_eq!(got.classes(), expected, "{anchor} ({mode})");
        }
    }
}

#[test]
fn four_scene_example() {
    let vocab = Arc::new(Vocabulary::default_urban());
    let scenes = [
        scene("s1", "street", &["bench", "tree", "bench"], &[]),
        scene("s2", "street", &["bench", "tree"], &[]),
        scene("s3", "street", &["bench", "sign"], &[]),
        scene("s4", "street", &["tree"], &[]),
    ];
    let m = CooccurrenceMatrix::build(&scenes, vocab).unwrap();
    assert_eq!(m.pair_count("bench", "tree").unwrap(), 2);
    assert_eq!(m.pair_count("bench", "bench").unwrap(), 3);
    assert_eq!(m.exact_conditional("bench", "tree").unwrap(), Some(Ratio::new(2, 3)));
    assert_eq!(m.exact_conditional("tree", "bench").unwrap(), Some(Ratio::new(2, 3)));
    assert_eq!(m.exact_conditional("sign", "bench").unwrap(), Some(Ratio::new(1, 1)));
    let r = m.top_k("bench", 5, NormMode::Conditional, &[]).unwrap();
    assert_eq!(r.classes(), ["tree", "sign"]);
    assert_eq!(m.scenes_processed(), 4);
}

#[test]
fn empty_corpus_gives_zero_matrix() {
    let m = CooccurrenceMatrix::build(&[], Arc::new(Vocabulary::default_urban())).unwrap();
    assert!(m.rows().iter().flatten().all(|&c| c == 0));
    let e = m.embed("bench", NormMode::Conditional).unwrap();
    assert!(e.degenerate && e.values.iter().all(|&v| v == 0.0));
    assert!(m.top_k("bench", 5, NormMode::Conditional, &[]).unwrap().entries.is_empty());
}

#[test]
fn unknown_labels_and_k() {
    let m = reference_matrix();
    assert!(matches!(m.top_k("zeppelin", 5, NormMode::Conditional, &[]), Err(CooccurError::UnknownLabel(_))));
    assert!(matches!(m.top_k("bench", 0, NormMode::Conditional, &[]), Err(CooccurError::InvalidK)));
}

#[test]
fn snapshot_rejects_another_vocabulary() {
    let m = reference_matrix();
    let json = m.to_snapshot_json();
    assert!(CooccurrenceMatrix::from_snapshot_json(&json, Some(m.vocab())).is_ok());
    let other = synthetic_vocab(3);
    assert!(matches!(CooccurrenceMatrix::from_snapshot_json(&json, Some(&*other)), Err(CooccurError::VocabMismatch)));
    let mut tampered: serde_json::Value = serde_json::from_str(&json).unwrap();
    tampered["vocab_hash"] = "0".into();
    assert!(matches!(
        CooccurrenceMatrix::from_snapshot_json(&tampered.to_string(), None),
        Err(CooccurError::Snapshot(_))
    ));
}

#[test]
fn partitions_sum_to_the_whole() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vocab = synthetic_vocab(10);
    let mut scenes = random_scenes(&mut rng, &vocab, 80);
    for (i, s) in scenes.iter_mut().enumerate() {
        s.scene_category = ["park", "street", "plaza"][i % 3].into();
    }
    let whole = CooccurrenceMatrix::build(&scenes, vocab.clone()).unwrap();
    let parts = CooccurrenceMatrix::build_partitioned(&scenes, vocab.clone()).unwrap();
    let mut sum = CooccurrenceMatrix::zeros(vocab);
    for p in parts.values() {
        sum = sum.merge(p).unwrap();
    }
    assert_eq!(sum.rows(), whole.rows());
    assert_eq!(sum.anchor_counts(), whole.anchor_counts());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = synthetic_vocab(rng.gen_range(1..=24));
        let scenes = random_scenes(&mut rng, &vocab, 120);
        let m = CooccurrenceMatrix::build(&scenes, vocab.clone()).unwrap();
        let oracle = oracle_counts(&scenes, &vocab);
        prop_assert_eq!(m.rows(), oracle.clone());
        let diag: Vec<u64> = (0..m.n()).map(|i| oracle[i][i]).collect();
        prop_assert_eq!(m.anchor_counts(), &diag[..]);
        prop_assert_eq!(m.scenes_processed(), scenes.len() as u64);
        for i in 0..m.n() {
            for j in 0..m.n() {
                prop_assert_eq!(m.count(i, j), m.count(j, i));
                prop_assert!(m.count(i, j) <= m.anchor_count(i).min(m.anchor_count(j)));
            }
        }
    }

    #[test]
    fn scene_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = synthetic_vocab(12);
        let mut scenes = random_scenes(&mut rng, &vocab, 60);
        let a = CooccurrenceMatrix::build(&scenes, vocab.clone()).unwrap();
        scenes.reverse();
        let b = CooccurrenceMatrix::build(&scenes, vocab).unwrap();
        prop_assert_eq!(a.rows(), b.rows());
    }

    #[test]
    fn normalization_and_ranking_invariants(seed in any::<u64>(), factor in 2u64..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng);
        let scaled = m.scaled(factor);
        for (i, anchor) in m.vocab().classes().iter().enumerate() {
            let cond = m.embed(anchor, NormMode::Conditional).unwrap();
            for (j, other) in m.vocab().classes().iter().enumerate() {
                if i == j || m.anchor_count(i) == 0 {
                    continue;
                }
                let exact = m.exact_conditional(anchor, other).unwrap().unwrap();
                prop_assert_eq!(exact, Ratio::new(m.count(i, j), m.anchor_count(i)));
                prop_assert_eq!(cond.values[j], *exact.numer() as f64 / *exact.denom() as f64);
                prop_assert_eq!(scaled.exact_conditional(anchor, other).unwrap().unwrap(), exact);
            }
            let rs = m.embed(anchor, NormMode::RowSum).unwrap();
            if !rs.degenerate {
                prop_assert!((rs.values.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
            let base = all_classes(&m, anchor, NormMode::Conditional);
            prop_assert_eq!(&all_classes(&m, anchor, NormMode::RowSum), &base);
            prop_assert_eq!(&all_classes(&scaled, anchor, NormMode::Conditional), &base);
            prop_assert_eq!(&all_classes(&scaled, anchor, NormMode::RowSum), &base);
        }
    }

    #[test]
    fn snapshot_and_counts_csv_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng);
        let back = CooccurrenceMatrix::from_snapshot_json(&m.to_snapshot_json(), Some(m.vocab())).unwrap();
        prop_assert_eq!(back.rows(), m.rows());
        prop_assert_eq!(back.anchor_counts(), m.anchor_counts());
        prop_assert_eq!(back.to_snapshot_json(), m.to_snapshot_json());
        let csv = m.export_csv(ExportForm::Counts);
        let table = MatrixTable::parse_csv(&csv, ExportForm::Counts).unwrap();
        prop_assert_eq!(&table.classes, &m.vocab().classes().to_vec());
        let counts: Vec<Vec<u64>> = table.values.iter().map(|r| r.iter().map(|&v| v as u64).collect()).collect();
        prop_assert_eq!(counts, m.rows());
    }
}
