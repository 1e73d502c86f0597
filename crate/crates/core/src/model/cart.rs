use super::grow::{BinStats, Criterion, Grower};
use super::{
    default_feature_names, validate_training_input, BinnedMatrix, GbdtModel, ModelError,
    ModelKind, TrainConfig,
};

/// Leaf probabilities are kept this far from 0 and 1 before taking log-odds.
const PROB_FLOOR: f64 = 1e-7;

/// Gini criterion: `a` is the positive weight, `b` the total weight.
struct Gini {
    min_gain: f64,
}

fn weighted_gini(s: BinStats) -> f64 {
    if s.b <= 0.0 {
        return 0.0;
    }
    let p = s.a / s.b;
    s.b * 2.0 * p * (1.0 - p)
}

impl Criterion for Gini {
    fn gain(&self, parent: BinStats, left: BinStats, right: BinStats) -> f64 {
        weighted_gini(parent) - weighted_gini(left) - weighted_gini(right)
    }

    fn leaf_value(&self, s: BinStats) -> f64 {
        let p = if s.b > 0.0 { s.a / s.b } else { 0.5 };
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        (p / (1.0 - p)).ln()
    }

    // Zero-gain splits are allowed so that patterns such as XOR, where no
    // single split helps, can still be resolved one level down.
    fn accept(&self, gain: f64) -> bool {
        gain >= self.min_gain
    }

    fn is_pure(&self, s: BinStats) -> bool {
        s.a <= 0.0 || s.a >= s.b
    }
}

/// A single CART classification tree with Gini splits over the same
/// histogram bins and stopping rules as the boosted model.
///
/// Leaves hold log-odds of the (weighted) positive fraction, so the returned
/// model predicts that fraction directly.
pub fn train_decision_tree(
    features: &[Vec<f64>],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<GbdtModel, ModelError> {
    let n_features = validate_training_input(features, labels, config)?;
    let binned = BinnedMatrix::new(features, n_features, config.n_bins);
    let weights: Vec<f64> = labels
        .iter()
        .map(|&y| if y == 1 { config.positive_class_weight } else { 1.0 })
        .collect();
    let positive: Vec<f64> = weights
        .iter()
        .zip(labels)
        .map(|(&w, &y)| if y == 1 { w } else { 0.0 })
        .collect();
    let grower = Grower {
        binned: &binned,
        a: &positive,
        b: &weights,
        criterion: Gini {
            min_gain: config.min_gain,
        },
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
    };
    let tree = grower.grow((0..features.len() as u32).collect(), 0);
    Ok(GbdtModel {
        kind: ModelKind::DecisionTree,
        config: config.clone(),
        base_score: 0.0,
        learning_rate: 1.0,
        feature_names: default_feature_names(n_features),
        bin_edges: binned.into_edges(),
        trees: vec![tree],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TreeNode;

    fn cfg(max_depth: usize, min_samples_leaf: usize) -> TrainConfig {
        TrainConfig {
            max_depth,
            min_samples_leaf,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn xor_is_solved_at_depth_two() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..10 {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                x.push(vec![a, b]);
                y.push(u8::from(a != b));
            }
        }
        let m = train_decision_tree(&x, &y, &cfg(2, 1)).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(row, &label)| u8::from(m.predict(row).unwrap() >= 0.5) == label)
            .count();
        assert_eq!(correct, x.len());
        assert_eq!(m.trees[0].depth(), 2);
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let m = train_decision_tree(&x, &[0, 0, 1, 1], &cfg(5, 1)).unwrap();
        // One split separates the classes; both children are pure.
        assert_eq!(m.trees[0].depth(), 1);
        assert!(m.predict(&[0.0]).unwrap() < 1e-6);
        assert!(m.predict(&[3.0]).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn min_leaf_equal_to_n_gives_prior() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = [0, 0, 0, 1, 0, 0, 1, 0, 0, 1];
        let m = train_decision_tree(&x, &y, &cfg(6, 10)).unwrap();
        assert!(matches!(m.trees[0], TreeNode::Leaf { .. }));
        assert!((m.predict(&[4.0]).unwrap() - 0.3).abs() < 1e-12);
    }
}
