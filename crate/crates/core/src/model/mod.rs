//! Histogram-based gradient-boosted trees and a CART baseline.

mod binning;
mod cart;
mod gbdt;
mod grow;
mod io;

use serde::{Deserialize, Serialize};

pub use binning::{bin_of, compute_bin_edges, BinnedMatrix};
pub use cart::train_decision_tree;
pub use gbdt::{train_gbdt, Trained, TrainingLog};
pub use io::{load_model, save_model, MODEL_VERSION};

/// Raw margins are clamped to this magnitude so probabilities stay inside (0, 1).
pub const MAX_MARGIN: f64 = 30.0;

/// Two gains closer than this relative distance are treated as tied, and the
/// earlier (feature, bin) candidate is kept.
pub(crate) const GAIN_TIE_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} features, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("row {row}, feature {feature}: value is not finite")]
    NonFiniteFeature { row: usize, feature: usize },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_bins: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    pub positive_class_weight: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Fraction of rows drawn (without replacement, per tree) for fitting.
    pub subsample: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 200,
            max_depth: 6,
            learning_rate: 0.1,
            n_bins: 64,
            min_samples_leaf: 20,
            min_gain: 0.0,
            positive_class_weight: 1.0,
            lambda: 1.0,
            subsample: 1.0,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.n_trees < 1 {
            return bad("n_trees must be at least 1");
        }
        if !(2..=256).contains(&self.n_bins) {
            return bad("n_bins must be in 2..=256");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(self.positive_class_weight > 0.0 && self.positive_class_weight.is_finite()) {
            return bad("positive_class_weight must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if self.min_gain.is_nan() {
            return bad("min_gain must be a number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Rows with `x <= threshold` go left.
        threshold: f64,
        missing_goes_left: bool,
        /// Loss reduction credited to this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn leaf(value: f64) -> Self {
        TreeNode::Leaf { value }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    missing_goes_left,
                    left,
                    right,
                    ..
                } => {
                    let v = x[*feature];
                    let go_left = if v.is_nan() {
                        *missing_goes_left
                    } else {
                        v <= *threshold
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Pre-order walk over split nodes as `(feature, threshold, gain)`.
    pub fn splits(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if let TreeNode::Split {
                feature,
                threshold,
                gain,
                left,
                right,
                ..
            } = node
            {
                out.push((*feature, *threshold, *gain));
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gbdt,
    DecisionTree,
}

/// An additive tree ensemble with a logistic link.
///
/// The probability for `x` is `sigmoid(base_score + learning_rate * sum(tree(x)))`.
/// A single CART tree is stored the same way with `base_score = 0`,
/// `learning_rate = 1` and leaf log-odds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    pub bin_edges: Vec<Vec<f64>>,
    pub trees: Vec<TreeNode>,
}

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-MAX_MARGIN, MAX_MARGIN);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GbdtModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.n_features() {
            return Err(ModelError::ArityMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.evaluate(x)).sum();
        Ok(self.base_score + self.learning_rate * sum)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.margin(x).map(sigmoid)
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

pub fn predict(model: &GbdtModel, x: &[f64]) -> Result<f64, ModelError> {
    model.predict(x)
}

/// Features ranked by total split gain, descending; ties go to the lower
/// index. Features never used in a split are left out.
pub fn feature_importance(model: &GbdtModel) -> Vec<(String, f64)> {
    let mut totals: Vec<Option<f64>> = vec![None; model.n_features()];
    for tree in &model.trees {
        for (f, _, gain) in tree.splits() {
            *totals[f].get_or_insert(0.0) += gain;
        }
    }
    let mut ranked: Vec<(usize, f64)> = totals
        .into_iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|g| (i, g)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .map(|(i, g)| (model.feature_names[i].clone(), g))
        .collect()
}

/// Default names: the canonical feature list for 75-wide inputs, `f{i}` otherwise.
pub(crate) fn default_feature_names(n: usize) -> Vec<String> {
    if n == crate::features::FEATURE_COUNT {
        crate::features::feature_names().to_vec()
    } else {
        (0..n).map(|i| format!("f{i}")).collect()
    }
}

/// Input checks shared by both trainers. Returns the feature count.
pub(crate) fn validate_training_input(
    features: &[Vec<f64>],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<usize, ModelError> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(ModelError::ArityMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    if features.len() < 2 {
        return Err(ModelError::InsufficientSamples(features.len()));
    }
    let n_features = features[0].len();
    for (r, row) in features.iter().enumerate() {
        if row.len() != n_features {
            return Err(ModelError::ArityMismatch {
                expected: n_features,
                got: row.len(),
            });
        }
        if let Some(f) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteFeature { row: r, feature: f });
        }
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if labels.iter().any(|&l| l > 1) {
        return Err(ModelError::InvalidConfig("labels must be 0 or 1".into()));
    }
    if positives == 0 || positives == labels.len() {
        return Err(ModelError::SingleClassInput);
    }
    Ok(n_features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> GbdtModel {
        GbdtModel {
            kind: ModelKind::Gbdt,
            config: TrainConfig::default(),
            base_score: 0.0,
            learning_rate: 1.0,
            feature_names: vec!["f0".into(), "f1".into()],
            bin_edges: vec![vec![5.0], vec![]],
            trees: vec![TreeNode::Split {
                feature: 0,
                threshold: 5.0,
                missing_goes_left: true,
                gain: 2.5,
                left: Box::new(TreeNode::leaf(-1.0)),
                right: Box::new(TreeNode::leaf(1.0)),
            }],
        }
    }

    #[test]
    fn empty_model_predicts_half() {
        let mut m = stump();
        m.trees.clear();
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), 0.5);
        assert!(feature_importance(&m).is_empty());
    }

    #[test]
    fn stump_trace() {
        let m = stump();
        let p = m.predict(&[10.0, 0.0]).unwrap();
        assert!((p - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((m.predict(&[5.0, 0.0]).unwrap() - (1.0 - 0.731_058_578_630_004_9)).abs() < 1e-12);
        assert_eq!(m.predict(&[f64::NAN, 0.0]).unwrap(), m.predict(&[0.0, 0.0]).unwrap());
    }

    #[test]
    fn stump_importance_has_one_feature() {
        let imp = feature_importance(&stump());
        assert_eq!(imp, vec![("f0".to_string(), 2.5)]);
    }

    #[test]
    fn arity_and_range() {
        let m = stump();
        assert!(matches!(
            m.predict(&[1.0]),
            Err(ModelError::ArityMismatch { expected: 2, got: 1 })
        ));
        let mut big = stump();
        big.trees = vec![TreeNode::leaf(1e6)];
        let p = big.predict(&[0.0, 0.0]).unwrap();
        assert!(p > 0.0 && p < 1.0);
        big.trees = vec![TreeNode::leaf(-1e6)];
        let p = big.predict(&[0.0, 0.0]).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn config_bounds() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { n_trees: 0, ..TrainConfig::default() },
            TrainConfig { n_bins: 1, ..TrainConfig::default() },
            TrainConfig { n_bins: 257, ..TrainConfig::default() },
            TrainConfig { max_depth: 0, ..TrainConfig::default() },
        ] {
            assert!(matches!(bad.validate(), Err(ModelError::InvalidConfig(_))));
        }
    }
}
