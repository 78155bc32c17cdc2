use std::collections::BTreeSet;

use affect_core::eval::{multilabel_metrics, pearson};
use proptest::prelude::*;

fn set_of(row: &[u8]) -> BTreeSet<usize> {
    row.iter().enumerate().filter(|(_, &v)| v == 1).map(|(j, _)| j).collect()
}

fn f1_from_sets(pred: &BTreeSet<(usize, usize)>, gold: &BTreeSet<(usize, usize)>) -> f64 {
    let tp = pred.intersection(gold).count() as f64;
    if pred.is_empty() && gold.is_empty() {
        return 0.0;
    }
    let p = if pred.is_empty() { 0.0 } else { tp / pred.len() as f64 };
    let r = if gold.is_empty() { 0.0 } else { tp / gold.len() as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn oracle(pred: &[Vec<u8>], gold: &[Vec<u8>]) -> (f64, f64, f64) {
    let jac = pred
        .iter()
        .zip(gold)
        .map(|(p, g)| {
            let (a, b) = (set_of(p), set_of(g));
            let u = a.union(&b).count();
            if u == 0 {
                1.0
            } else {
                a.intersection(&b).count() as f64 / u as f64
            }
        })
        .sum::<f64>()
        / pred.len() as f64;
    let pairs = |rows: &[Vec<u8>], label: Option<usize>| -> BTreeSet<(usize, usize)> {
        rows.iter()
            .enumerate()
            .flat_map(|(i, r)| set_of(r).into_iter().map(move |j| (i, j)))
            .filter(|&(_, j)| label.is_none_or(|l| l == j))
            .collect()
    };
    let micro = f1_from_sets(&pairs(pred, None), &pairs(gold, None));
    let macro_ = (0..11).map(|l| f1_from_sets(&pairs(pred, Some(l)), &pairs(gold, Some(l)))).sum::<f64>() / 11.0;
    (jac, micro, macro_)
}

fn pattern(bits: u16) -> Vec<u8> {
    (0..11).map(|j| (bits >> j & 1) as u8).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_set_oracle(rows in prop::collection::vec((0u16..2048, 0u16..2048), 1..=4)) {
        let pred: Vec<Vec<u8>> = rows.iter().map(|r| pattern(r.0)).collect();
        let gold: Vec<Vec<u8>> = rows.iter().map(|r| pattern(r.1)).collect();
        let got = multilabel_metrics(&pred, &gold).unwrap();
        let (j, mi, ma) = oracle(&pred, &gold);
        prop_assert!((got.jaccard - j).abs() < 1e-12);
        prop_assert!((got.micro_f1 - mi).abs() < 1e-12);
        prop_assert!((got.macro_f1 - ma).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_invariant(v in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..50)) {
        let (p, g): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        if let Ok(r) = pearson(&p, &g) {
            let scaled: Vec<f64> = p.iter().map(|x| 2.0 * x + 3.0).collect();
            prop_assert!((pearson(&scaled, &g).unwrap() - r).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn every_single_pattern_against_oracle() {
    for a in 0..2048u16 {
        let pred = vec![pattern(a), pattern(0b101)];
        let gold = vec![pattern(a.rotate_left(3) & 2047), pattern(0b110)];
        let got = multilabel_metrics(&pred, &gold).unwrap();
        let (j, mi, ma) = oracle(&pred, &gold);
        assert!((got.jaccard - j).abs() < 1e-12 && (got.micro_f1 - mi).abs() < 1e-12 && (got.macro_f1 - ma).abs() < 1e-12);
    }
}

#[test]
fn three_example_case() {
    let pred = vec![pattern(0b011), pattern(0b100), pattern(0)];
    let gold = vec![pattern(0b001), pattern(0b110), pattern(0)];
    let s = multilabel_metrics(&pred, &gold).unwrap();
    // jaccard (1/2 + 1/2 + 1) / 3; micro tp=2 fp=1 fn=1
    assert!((s.jaccard - 2.0 / 3.0).abs() < 1e-15);
    assert!((s.micro_f1 - 4.0 / 6.0).abs() < 1e-15);
    // label 0: 1, label 1: 0, label 2: 1, rest undefined
    assert!((s.macro_f1 - 2.0 / 11.0).abs() < 1e-15);
}
