/// The five summary statistics used for every amount series.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats5 {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub median: f64,
    /// Population variance.
    pub var: f64,
}

impl Stats5 {
    pub fn to_array(self) -> [f64; 5] {
        [self.min, self.max, self.avg, self.median, self.var]
    }
}

/// Summarises `series`; an empty series yields all zeros.
///
/// Values are sorted before accumulation so the result does not depend on
/// the order of the input.
pub fn stats5(series: &[f64]) -> Stats5 {
    if series.is_empty() {
        return Stats5::default();
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let (min, max) = (sorted[0], sorted[n - 1]);
    if min == max {
        return Stats5 {
            min,
            max,
            avg: min,
            median,
            var: 0.0,
        };
    }
    // Two passes with compensated sums: the mean is exact whenever the sum
    // is representable, and the variance uses the corrected two-pass form.
    let len = n as f64;
    let mean = (compensated_sum(sorted.iter().copied()) / len).clamp(min, max);
    let d1 = compensated_sum(sorted.iter().map(|x| x - mean));
    let d2 = compensated_sum(sorted.iter().map(|x| (x - mean) * (x - mean)));
    Stats5 {
        min,
        max,
        avg: mean,
        median,
        var: ((d2 - d1 * d1 / len) / len).max(0.0),
    }
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}
