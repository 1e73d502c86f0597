use proptest::prelude::*;
use sybilgraph::eval::{
    auc, auc_counts, best_f1_threshold, confusion_metrics, stratified_split, ScoredDataset,
};

/// Scores on a coarse grid (heavy ties) with both classes present.
fn arb_scored(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (1u32..30).prop_flat_map(move |levels| {
        prop::collection::vec((0..=levels, any::<bool>()), 2..=max).prop_map(move |rows| {
            let scores = rows.iter().map(|(s, _)| f64::from(*s) / f64::from(levels)).collect();
            let mut labels: Vec<u8> = rows.iter().map(|(_, l)| u8::from(*l)).collect();
            labels[0] = 0;
            labels[1] = 1;
            (scores, labels)
        })
    })
}

fn brute_counts(scores: &[f64], labels: &[u8]) -> (u64, u64) {
    let mut num = 0;
    let mut den = 0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 2;
                num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    (num, den)
}

fn ds(scores: &[f64], labels: &[u8]) -> ScoredDataset {
    ScoredDataset::from_scores(scores, labels).unwrap()
}

proptest! {
    #[test]
    fn fast_auc_equals_pairwise((scores, labels) in arb_scored(300)) {
        let (num, den) = brute_counts(&scores, &labels);
        let data = ds(&scores, &labels);
        prop_assert_eq!(auc_counts(&data).unwrap(), (num, den));
        prop_assert_eq!(auc(&data).unwrap(), num as f64 / den as f64);
    }

    #[test]
    fn flipping_labels_complements_auc((scores, labels) in arb_scored(200)) {
        let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        let (n1, d1) = auc_counts(&ds(&scores, &labels)).unwrap();
        let (n2, d2) = auc_counts(&ds(&scores, &flipped)).unwrap();
        prop_assert_eq!(d1, d2);
        prop_assert_eq!(n1 + n2, d1);
        let sum = auc(&ds(&scores, &labels)).unwrap() + auc(&ds(&scores, &flipped)).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn auc_ignores_increasing_transforms((scores, labels) in arb_scored(200), kind in 0usize..3) {
        let f = |s: f64| match kind {
            0 => s / 2.0,
            1 => s.sqrt(),
            _ => (s * 3.0).exp() / 30.0,
        };
        let moved: Vec<f64> = scores.iter().map(|&s| f(s)).collect();
        // The transform must stay strictly increasing after rounding on this sample.
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if scores[i] < scores[j] {
                    prop_assume!(moved[i] < moved[j]);
                }
            }
        }
        prop_assume!(moved.iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert_eq!(auc(&ds(&scores, &labels)).unwrap(), auc(&ds(&moved, &labels)).unwrap());
    }

    #[test]
    fn recall_grows_as_threshold_falls((scores, labels) in arb_scored(200)) {
        let data = ds(&scores, &labels);
        let mut last = -1.0;
        for k in (0..=40).rev() {
            let m = confusion_metrics(&data, f64::from(k) / 40.0).unwrap();
            prop_assert!(m.recall >= last);
            last = m.recall;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn confusion_counts_match_definitions((scores, labels) in arb_scored(200), t in 0.0f64..=1.0) {
        let m = confusion_metrics(&ds(&scores, &labels), t).unwrap();
        let count = |pred: bool, actual: u8| {
            scores.iter().zip(&labels).filter(|(s, l)| (**s >= t) == pred && **l == actual).count() as u64
        };
        prop_assert_eq!((m.tp, m.fp, m.tn, m.fn_), (count(true, 1), count(true, 0), count(false, 0), count(false, 1)));
        let p = if m.tp + m.fp == 0 { 0.0 } else { m.tp as f64 / (m.tp + m.fp) as f64 };
        let r = m.tp as f64 / (m.tp + m.fn_) as f64;
        prop_assert_eq!(m.precision, p);
        prop_assert_eq!(m.recall, r);
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        prop_assert!((m.f1 - f1).abs() < 1e-15);
    }

    #[test]
    fn best_threshold_beats_every_observed_score((scores, labels) in arb_scored(150)) {
        let data = ds(&scores, &labels);
        let best = best_f1_threshold(&data).unwrap();
        for &s in &scores {
            prop_assert!(confusion_metrics(&data, s).unwrap().f1 <= best.f1 + 1e-15);
        }
    }

    #[test]
    fn split_is_a_stratified_partition(
        labels in prop::collection::vec(0u8..2, 20..300),
        frac in 0.1f64..0.5,
        seed in any::<u64>(),
    ) {
        let n1 = labels.iter().filter(|&&l| l == 1).count();
        let n0 = labels.len() - n1;
        let want = |n: usize| (n as f64 * frac).round() as usize;
        prop_assume!((1..n1).contains(&want(n1)) && (1..n0).contains(&want(n0)));
        let s = stratified_split(&labels, frac, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let test_pos = s.test.iter().filter(|&&i| labels[i] == 1).count();
        prop_assert_eq!(test_pos, want(n1));
        prop_assert_eq!(s.test.len() - test_pos, want(n0));
        prop_assert_eq!(stratified_split(&labels, frac, seed).unwrap(), s);
    }
}
