use rand::seq::index::sample;
use serde::Serialize;

use super::grow::{BinStats, Criterion, Grower};
use super::{
    default_feature_names, sigmoid, validate_training_input, BinnedMatrix, GbdtModel, ModelError,
    ModelKind, TrainConfig, MAX_MARGIN,
};
use crate::seed::substream;

/// Newton-step criterion for logistic loss: `a` is the gradient, `b` the hessian.
struct Newton {
    lambda: f64,
    min_gain: f64,
}

impl Newton {
    fn score(&self, s: BinStats) -> f64 {
        s.a * s.a / (s.b + self.lambda)
    }
}

impl Criterion for Newton {
    fn gain(&self, parent: BinStats, left: BinStats, right: BinStats) -> f64 {
        0.5 * (self.score(left) + self.score(right) - self.score(parent))
    }

    fn leaf_value(&self, s: BinStats) -> f64 {
        if s.b + self.lambda == 0.0 {
            0.0
        } else {
            -s.a / (s.b + self.lambda)
        }
    }

    fn accept(&self, gain: f64) -> bool {
        gain > self.min_gain
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainingLog {
    /// Weighted mean log-loss on the training set before any tree.
    pub initial_loss: f64,
    /// Training log-loss after each boosting iteration.
    pub losses: Vec<f64>,
}

impl TrainingLog {
    pub fn is_non_increasing(&self) -> bool {
        std::iter::once(&self.initial_loss)
            .chain(&self.losses)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: GbdtModel,
    pub log: TrainingLog,
}

fn log_loss(margin: f64, y: u8) -> f64 {
    let z = margin.clamp(-MAX_MARGIN, MAX_MARGIN);
    // ln(1 + e^{-z}) for positives, ln(1 + e^{z}) for negatives
    let s = if y == 1 { -z } else { z };
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

fn mean_loss(margins: &[f64], labels: &[u8], weights: &[f64], total_weight: f64) -> f64 {
    margins
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((&m, &y), &w)| w * log_loss(m, y))
        .sum::<f64>()
        / total_weight
}

/// Trains a boosted ensemble with second-order logistic updates.
///
/// Bins are computed once from the training matrix. Each tree is grown
/// depth-wise on histogram-accumulated gradient and hessian sums, with
/// leaf values `-G / (H + lambda)`.
pub fn train_gbdt(
    features: &[Vec<f64>],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<Trained, ModelError> {
    let n_features = validate_training_input(features, labels, config)?;
    let n = features.len();
    let binned = BinnedMatrix::new(features, n_features, config.n_bins);

    let weights: Vec<f64> = labels
        .iter()
        .map(|&y| if y == 1 { config.positive_class_weight } else { 1.0 })
        .collect();
    let total_weight: f64 = weights.iter().sum();
    let positive_weight: f64 = weights
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(w, _)| w)
        .sum();
    let prior = positive_weight / total_weight;
    let base_score = (prior / (1.0 - prior)).ln();

    let mut margins = vec![base_score; n];
    let mut log = TrainingLog {
        initial_loss: mean_loss(&margins, labels, &weights, total_weight),
        losses: Vec::with_capacity(config.n_trees),
    };
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = substream(config.rng_seed, "gbdt-subsample");
    let n_sample = ((n as f64 * config.subsample).round() as usize).clamp(1, n);

    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let y = f64::from(labels[i]);
            grad[i] = weights[i] * (p - y);
            hess[i] = weights[i] * (p * (1.0 - p)).max(1e-16);
        }
        let rows: Vec<u32> = if n_sample == n {
            (0..n as u32).collect()
        } else {
            let mut picked: Vec<u32> = sample(&mut rng, n, n_sample)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            picked.sort_unstable();
            picked
        };
        let grower = Grower {
            binned: &binned,
            a: &grad,
            b: &hess,
            criterion: Newton {
                lambda: config.lambda,
                min_gain: config.min_gain,
            },
            max_depth: config.max_depth,
            min_samples_leaf: config.min_samples_leaf,
        };
        let tree = grower.grow(rows, 0);
        for (m, x) in margins.iter_mut().zip(features) {
            *m += config.learning_rate * tree.evaluate(x);
        }
        log.losses
            .push(mean_loss(&margins, labels, &weights, total_weight));
        trees.push(tree);
    }

    Ok(Trained {
        model: GbdtModel {
            kind: ModelKind::Gbdt,
            config: config.clone(),
            base_score,
            learning_rate: config.learning_rate,
            feature_names: default_feature_names(n_features),
            bin_edges: binned.into_edges(),
            trees,
        },
        log,
    })
}
