//! Depth-wise tree growth over histogram bins, shared by both trainers.

use std::ops::{AddAssign, Sub};

use rayon::prelude::*;

use super::{BinnedMatrix, TreeNode, GAIN_TIE_EPS};

/// Per-bin accumulator: two weighted sums plus a row count.
///
/// Boosting stores (gradient, hessian); CART stores (positive weight, weight).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct BinStats {
    pub a: f64,
    pub b: f64,
    pub count: usize,
}

impl AddAssign for BinStats {
    fn add_assign(&mut self, o: Self) {
        self.a += o.a;
        self.b += o.b;
        self.count += o.count;
    }
}

impl Sub for BinStats {
    type Output = BinStats;

    fn sub(self, o: Self) -> BinStats {
        BinStats {
            a: self.a - o.a,
            b: self.b - o.b,
            count: self.count - o.count,
        }
    }
}

pub(crate) trait Criterion: Sync {
    fn gain(&self, parent: BinStats, left: BinStats, right: BinStats) -> f64;
    fn leaf_value(&self, node: BinStats) -> f64;
    /// Whether a split with this gain may be taken.
    fn accept(&self, gain: f64) -> bool;
    fn is_pure(&self, _node: BinStats) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub bin: usize,
    pub gain: f64,
}

pub(crate) fn is_better(new: f64, best: f64) -> bool {
    new - best > GAIN_TIE_EPS * best.abs().max(new.abs())
}

pub(crate) struct Grower<'a, C> {
    pub binned: &'a BinnedMatrix,
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub criterion: C,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

const PARALLEL_WORK: usize = 16_384;

impl<C: Criterion> Grower<'_, C> {
    fn totals(&self, rows: &[u32]) -> BinStats {
        let mut s = BinStats::default();
        for &r in rows {
            s += BinStats {
                a: self.a[r as usize],
                b: self.b[r as usize],
                count: 1,
            };
        }
        s
    }

    fn best_for_feature(&self, f: usize, rows: &[u32], parent: BinStats) -> Option<SplitChoice> {
        let n_cuts = self.binned.edges()[f].len();
        if n_cuts == 0 {
            return None;
        }
        let col = self.binned.column(f);
        let mut hist = vec![BinStats::default(); n_cuts + 1];
        for &r in rows {
            let r = r as usize;
            hist[col[r] as usize] += BinStats {
                a: self.a[r],
                b: self.b[r],
                count: 1,
            };
        }
        let mut best: Option<SplitChoice> = None;
        let mut left = BinStats::default();
        for (bin, h) in hist.iter().enumerate().take(n_cuts) {
            left += *h;
            if left.count < self.min_samples_leaf {
                continue;
            }
            let right = parent - left;
            if right.count < self.min_samples_leaf {
                break;
            }
            let gain = self.criterion.gain(parent, left, right);
            if !gain.is_finite() {
                continue;
            }
            if best.is_none_or(|b| is_better(gain, b.gain)) {
                best = Some(SplitChoice { feature: f, bin, gain });
            }
        }
        best
    }

    /// Best split of `rows`, scanning features then bins in ascending order.
    pub fn best_split(&self, rows: &[u32]) -> Option<SplitChoice> {
        let parent = self.totals(rows);
        let n_features = self.binned.n_features();
        let per_feature: Vec<Option<SplitChoice>> = if rows.len() * n_features >= PARALLEL_WORK {
            (0..n_features)
                .into_par_iter()
                .map(|f| self.best_for_feature(f, rows, parent))
                .collect()
        } else {
            (0..n_features)
                .map(|f| self.best_for_feature(f, rows, parent))
                .collect()
        };
        per_feature.into_iter().flatten().fold(None, |best, c| match best {
            Some(b) if !is_better(c.gain, b.gain) => Some(b),
            _ => Some(c),
        })
    }

    pub fn grow(&self, rows: Vec<u32>, depth: usize) -> TreeNode {
        let totals = self.totals(&rows);
        if depth >= self.max_depth
            || rows.len() < 2 * self.min_samples_leaf
            || self.criterion.is_pure(totals)
        {
            return TreeNode::leaf(self.criterion.leaf_value(totals));
        }
        let Some(split) = self
            .best_split(&rows)
            .filter(|s| self.criterion.accept(s.gain))
        else {
            return TreeNode::leaf(self.criterion.leaf_value(totals));
        };
        let col = self.binned.column(split.feature);
        let (left, right): (Vec<u32>, Vec<u32>) = rows
            .into_iter()
            .partition(|&r| col[r as usize] as usize <= split.bin);
        TreeNode::Split {
            feature: split.feature,
            threshold: self.binned.edges()[split.feature][split.bin],
            missing_goes_left: true,
            gain: split.gain,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }
}
