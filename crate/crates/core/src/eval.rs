//! Classification metrics, held-out splitting and the comparison table.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::substream;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset needs at least one positive and one negative")]
    SingleClassDataset,
    #[error("class {class} has {count} rows, too few for test fraction {fraction}")]
    ClassTooSmall {
        class: u8,
        count: usize,
        fraction: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRow {
    pub address: String,
    pub score: f64,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredDataset {
    rows: Vec<ScoredRow>,
}

impl ScoredDataset {
    pub fn new(rows: Vec<ScoredRow>) -> Result<Self, EvalError> {
        if rows.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        for r in &rows {
            if !(0.0..=1.0).contains(&r.score) {
                return Err(EvalError::InvalidInput(format!(
                    "score {} for {} is outside [0, 1]",
                    r.score, r.address
                )));
            }
            if r.label > 1 {
                return Err(EvalError::InvalidInput(format!(
                    "label {} for {} is not 0 or 1",
                    r.label, r.address
                )));
            }
        }
        Ok(ScoredDataset { rows })
    }

    /// Builds a dataset from parallel score and label columns with synthetic addresses.
    pub fn from_scores(scores: &[f64], labels: &[u8]) -> Result<Self, EvalError> {
        if scores.len() != labels.len() {
            return Err(EvalError::InvalidInput(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        Self::new(
            scores
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(i, (&score, &label))| ScoredRow {
                    address: format!("row{i}"),
                    score,
                    label,
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[ScoredRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn report_from_counts(threshold: f64, tp: u64, fp: u64, tn: u64, fn_: u64) -> MetricsReport {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    MetricsReport {
        threshold,
        tp,
        fp,
        tn,
        fn_,
        precision,
        recall,
        f1: f1_of(precision, recall),
        auc: None,
    }
}

/// Counts at `threshold`; a row is predicted positive iff `score >= threshold`.
pub fn confusion_metrics(data: &ScoredDataset, threshold: f64) -> Result<MetricsReport, EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(EvalError::InvalidInput(format!(
            "threshold {threshold} is outside [0, 1]"
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for r in data.rows() {
        match (r.score >= threshold, r.label == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(report_from_counts(threshold, tp, fp, tn, fn_))
}

/// Twice the Mann-Whitney statistic and its denominator: `(2*wins + ties, 2*P*N)`.
pub fn auc_counts(data: &ScoredDataset) -> Result<(u64, u64), EvalError> {
    let mut sorted: Vec<(f64, u8)> = data.rows().iter().map(|r| (r.score, r.label)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positives = sorted.iter().filter(|r| r.1 == 1).count() as u64;
    let negatives = sorted.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClassDataset);
    }
    let mut numerator = 0u64;
    let mut negatives_below = 0u64;
    for group in sorted.chunk_by(|a, b| a.0 == b.0) {
        let pos = group.iter().filter(|r| r.1 == 1).count() as u64;
        let neg = group.len() as u64 - pos;
        numerator += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
    }
    Ok((numerator, 2 * positives * negatives))
}

/// ROC AUC via rank statistics in O(N log N); tied pairs count one half.
pub fn auc(data: &ScoredDataset) -> Result<f64, EvalError> {
    let (num, den) = auc_counts(data)?;
    Ok(num as f64 / den as f64)
}

/// Confusion metrics at `threshold` plus AUC when both classes are present.
pub fn evaluate(data: &ScoredDataset, threshold: f64) -> Result<MetricsReport, EvalError> {
    let mut report = confusion_metrics(data, threshold)?;
    report.auc = auc(data).ok();
    Ok(report)
}

/// The observed score that maximises F1 when used as the threshold. Ties keep
/// the highest such score.
pub fn best_f1_threshold(data: &ScoredDataset) -> Result<MetricsReport, EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut sorted: Vec<(f64, u8)> = data.rows().iter().map(|r| (r.score, r.label)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_pos = sorted.iter().filter(|r| r.1 == 1).count() as u64;
    let total_neg = sorted.len() as u64 - total_pos;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut best: Option<MetricsReport> = None;
    for group in sorted.chunk_by(|a, b| a.0 == b.0) {
        for r in group {
            if r.1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let cand = report_from_counts(group[0].0, tp, fp, total_neg - fp, total_pos - tp);
        if best.as_ref().is_none_or(|b| cand.f1 > b.f1) {
            best = Some(cand);
        }
    }
    let mut best = best.expect("non-empty dataset");
    best.auc = auc(data).ok();
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Row indices, ascending.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffle with `round(n_c * test_fraction)` rows of each class
/// sent to the test side. Both sides must keep at least one row of each class.
pub fn stratified_split(labels: &[u8], test_fraction: f64, seed: u64) -> Result<Split, EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::InvalidInput(format!(
            "test fraction {test_fraction} is outside (0, 1)"
        )));
    }
    if labels.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut rng = substream(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1u8, 0] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == idx.len() {
            return Err(EvalError::ClassTooSmall {
                class,
                count: idx.len(),
                fraction: test_fraction,
            });
        }
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(EvalError::InvalidInput(format!("label {bad} is not 0 or 1")));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Plain-text table with columns Method, Precision, Recall, F1, AUC.
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let width = rows
        .iter()
        .map(|(m, _)| m.len())
        .chain(["Method".len()])
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}",
        "Method", "Precision", "Recall", "F1", "AUC"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 4 * 11));
    for (method, r) in rows {
        let auc = r.auc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}",
            method, r.precision, r.recall, r.f1, auc
        );
    }
    out
}
