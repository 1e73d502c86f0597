use proptest::prelude::*;
use sybilgraph::model::{
    bin_of, compute_bin_edges, load_model, save_model, train_decision_tree, train_gbdt,
    TrainConfig, TreeNode,
};

/// Rows of small-integer features with labels that lean on feature 0.
fn arb_fixture(max_rows: usize, d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    prop::collection::vec(
        (prop::collection::vec(0u8..12, d), any::<u8>()),
        8..=max_rows,
    )
    .prop_map(|rows| {
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|(r, _)| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let mut y: Vec<u8> = rows
            .iter()
            .map(|(r, noise)| u8::from(u16::from(r[0]) * 20 + u16::from(*noise) > 250))
            .collect();
        y[0] = 0;
        y[1] = 1;
        (x, y)
    })
}

fn stump(n_bins: usize) -> TrainConfig {
    TrainConfig {
        n_trees: 1,
        max_depth: 1,
        n_bins,
        min_samples_leaf: 1,
        ..TrainConfig::default()
    }
}

fn root(tree: &TreeNode) -> Option<(usize, f64)> {
    match tree {
        TreeNode::Split {
            feature, threshold, ..
        } => Some((*feature, *threshold)),
        TreeNode::Leaf { .. } => None,
    }
}

/// Split feature indices in pre-order, with `None` for leaves.
fn shape(tree: &TreeNode) -> Vec<Option<usize>> {
    match tree {
        TreeNode::Leaf { .. } => vec![None],
        TreeNode::Split {
            feature,
            left,
            right,
            ..
        } => {
            let mut out = vec![Some(*feature)];
            out.extend(shape(left));
            out.extend(shape(right));
            out
        }
    }
}

proptest! {
    #[test]
    fn class_weight_equals_duplication((x, y) in arb_fixture(60, 3), w in 2u32..5) {
        let weighted = TrainConfig { positive_class_weight: f64::from(w), ..stump(64) };
        let a = train_gbdt(&x, &y, &weighted).unwrap().model;

        let mut xd = Vec::new();
        let mut yd = Vec::new();
        for (row, &label) in x.iter().zip(&y) {
            let copies = if label == 1 { w } else { 1 };
            for _ in 0..copies {
                xd.push(row.clone());
                yd.push(label);
            }
        }
        let b = train_gbdt(&xd, &yd, &stump(64)).unwrap().model;
        prop_assert_eq!(root(&a.trees[0]), root(&b.trees[0]));
        prop_assert!((a.base_score - b.base_score).abs() < 1e-12);
    }

    #[test]
    fn monotone_transform_keeps_tree_structure(
        (x, y) in arb_fixture(80, 3),
        f in 0usize..3,
        kind in 0usize..3,
    ) {
        let transform = |v: f64| match kind {
            0 => v.exp(),
            1 => 3.0 * v - 7.0,
            _ => v * v * v + v,
        };
        let xt: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[f] = transform(r[f]);
                r
            })
            .collect();
        let cfg = TrainConfig { n_trees: 5, max_depth: 3, min_samples_leaf: 2, n_bins: 8, ..TrainConfig::default() };
        let a = train_gbdt(&x, &y, &cfg).unwrap().model;
        let b = train_gbdt(&xt, &y, &cfg).unwrap().model;
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            prop_assert_eq!(shape(ta), shape(tb));
        }
        for (ra, rb) in x.iter().zip(&xt) {
            prop_assert_eq!(a.predict(ra).unwrap(), b.predict(rb).unwrap());
        }
        let ca = train_decision_tree(&x, &y, &cfg).unwrap();
        let cb = train_decision_tree(&xt, &y, &cfg).unwrap();
        prop_assert_eq!(shape(&ca.trees[0]), shape(&cb.trees[0]));
    }

    #[test]
    fn bins_agree_with_thresholds(values in prop::collection::vec(-50i32..50, 1..200), n_bins in 2usize..70) {
        let xs: Vec<f64> = values.iter().map(|&v| f64::from(v) / 4.0).collect();
        let cuts = compute_bin_edges(&xs, n_bins);
        prop_assert!(cuts.len() < n_bins);
        prop_assert!(cuts.windows(2).all(|w| w[0] < w[1]));
        let mut distinct = xs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() <= n_bins {
            prop_assert_eq!(cuts.len(), distinct.len() - 1);
        }
        for &x in &xs {
            let b = usize::from(bin_of(x, &cuts));
            for (i, &c) in cuts.iter().enumerate() {
                prop_assert_eq!(b <= i, x <= c);
            }
        }
    }

    #[test]
    fn loss_never_rises((x, y) in arb_fixture(120, 4), lr in 0.05f64..0.5, depth in 1usize..5) {
        let cfg = TrainConfig { n_trees: 30, max_depth: depth, learning_rate: lr, min_samples_leaf: 3, ..TrainConfig::default() };
        let trained = train_gbdt(&x, &y, &cfg).unwrap();
        prop_assert!(trained.log.is_non_increasing());
        for t in &trained.model.trees {
            prop_assert!(t.depth() <= depth);
        }
        for row in &x {
            let p = trained.model.predict(row).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn saved_models_predict_identically((x, y) in arb_fixture(60, 3)) {
        let cfg = TrainConfig { n_trees: 8, min_samples_leaf: 2, ..TrainConfig::default() };
        let model = train_gbdt(&x, &y, &cfg).unwrap().model;
        let mut buf = Vec::new();
        save_model(&model, &mut buf).unwrap();
        let back = load_model(buf.as_slice()).unwrap();
        for row in &x {
            prop_assert_eq!(model.predict(row).unwrap().to_bits(), back.predict(row).unwrap().to_bits());
        }
    }
}

#[test]
fn subsampling_is_seeded() {
    let x: Vec<Vec<f64>> = (0..200).map(|i| vec![f64::from(i % 17), f64::from(i % 5)]).collect();
    let y: Vec<u8> = (0..200).map(|i| u8::from(i % 17 > 8)).collect();
    let cfg = |seed| TrainConfig {
        n_trees: 10,
        subsample: 0.5,
        min_samples_leaf: 2,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let a = train_gbdt(&x, &y, &cfg(5)).unwrap().model;
    let b = train_gbdt(&x, &y, &cfg(5)).unwrap().model;
    assert_eq!(a, b);
}
