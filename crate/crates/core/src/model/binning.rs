//! Quantile histogram bins.
//!
//! A feature's bins are described by ascending cut values `c_0 < ... < c_{m-1}`.
//! Value `x` falls in bin `b = #{c_i < x}`, so splitting after bin `b` sends
//! exactly the rows with `x <= c_b` left. NaN lands in bin 0 (missing goes
//! left).

/// Cut points for one feature, at most `n_bins - 1` of them.
///
/// When the feature has no more than `n_bins` distinct values every distinct
/// value but the largest becomes a cut, so histogram search is exhaustive.
/// Otherwise cuts are placed by rank so each bin holds roughly `n / n_bins`
/// rows; rank placement makes the bins invariant under monotone transforms.
pub fn compute_bin_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted.iter().copied() {
        match distinct.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= n_bins {
        return distinct[..distinct.len() - 1].iter().map(|d| d.0).collect();
    }
    let per_bin = sorted.len() as f64 / n_bins as f64;
    let mut cuts = Vec::with_capacity(n_bins - 1);
    let mut cumulative = 0usize;
    for &(v, count) in &distinct[..distinct.len() - 1] {
        cumulative += count;
        if cumulative as f64 >= per_bin * (cuts.len() + 1) as f64 {
            cuts.push(v);
            if cuts.len() == n_bins - 1 {
                break;
            }
        }
    }
    cuts
}

pub fn bin_of(x: f64, cuts: &[f64]) -> u8 {
    if x.is_nan() {
        return 0;
    }
    cuts.partition_point(|&c| c < x) as u8
}

/// Column-major binned copy of a training matrix.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    bins: Vec<u8>,
    edges: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn new(rows: &[Vec<f64>], n_features: usize, n_bins: usize) -> Self {
        let n_rows = rows.len();
        let mut bins = vec![0u8; n_rows * n_features];
        let mut edges = Vec::with_capacity(n_features);
        let mut column = vec![0.0; n_rows];
        for f in 0..n_features {
            for (c, row) in column.iter_mut().zip(rows) {
                *c = row[f];
            }
            let cuts = compute_bin_edges(&column, n_bins);
            for (r, &x) in column.iter().enumerate() {
                bins[f * n_rows + r] = bin_of(x, &cuts);
            }
            edges.push(cuts);
        }
        BinnedMatrix {
            n_rows,
            bins,
            edges,
        }
    }

    pub fn column(&self, f: usize) -> &[u8] {
        &self.bins[f * self.n_rows..(f + 1) * self.n_rows]
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<Vec<f64>> {
        self.edges
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_distinct_values_get_exhaustive_cuts() {
        let cuts = compute_bin_edges(&[3.0, 1.0, 2.0, 2.0, 3.0], 8);
        assert_eq!(cuts, [1.0, 2.0]);
        assert_eq!(bin_of(1.0, &cuts), 0);
        assert_eq!(bin_of(1.5, &cuts), 1);
        assert_eq!(bin_of(2.0, &cuts), 1);
        assert_eq!(bin_of(3.0, &cuts), 2);
        assert_eq!(bin_of(f64::NAN, &cuts), 0);
    }

    #[test]
    fn constant_feature_has_one_bin() {
        assert!(compute_bin_edges(&[4.0; 10], 16).is_empty());
    }

    #[test]
    fn quantile_cuts_respect_budget() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64).powi(3)).collect();
        for n_bins in [2, 16, 64, 256] {
            let cuts = compute_bin_edges(&values, n_bins);
            assert!(cuts.len() < n_bins);
            assert!(cuts.windows(2).all(|w| w[0] < w[1]));
            let max_bin = values.iter().map(|&v| bin_of(v, &cuts)).max().unwrap();
            assert_eq!(max_bin as usize, cuts.len());
        }
        // roughly equal occupancy
        let cuts = compute_bin_edges(&values, 10);
        let mut counts = [0usize; 10];
        for &v in &values {
            counts[bin_of(v, &cuts) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (90..=110).contains(&c)), "{counts:?}");
    }

    #[test]
    fn monotone_transform_preserves_bins() {
        let values: Vec<f64> = (0..500).map(|i| ((i * 37) % 211) as f64 - 50.0).collect();
        let mapped: Vec<f64> = values.iter().map(|v| v.exp()).collect();
        let a = compute_bin_edges(&values, 32);
        let b = compute_bin_edges(&mapped, 32);
        let ba: Vec<u8> = values.iter().map(|&v| bin_of(v, &a)).collect();
        let bb: Vec<u8> = mapped.iter().map(|&v| bin_of(v, &b)).collect();
        assert_eq!(ba, bb);
    }
}
