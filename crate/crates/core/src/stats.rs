//! Small descriptive statistics used by the posterior summaries.

use serde::{Deserialize, Serialize};

/// Median and equal-tailed interval of a set of draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// Whether the interval excludes zero.
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

/// Linear-interpolation quantile of already sorted values (the default
/// "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    quantile_sorted(&sorted(values), 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median and equal-tailed `level` interval.
pub fn credible_interval(values: &[f64], level: f64) -> Interval {
    let s = sorted(values);
    let tail = 0.5 * (1.0 - level);
    Interval {
        median: quantile_sorted(&s, 0.5),
        lower: quantile_sorted(&s, tail),
        upper: quantile_sorted(&s, 1.0 - tail),
    }
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Variance of the sample mean of an autocorrelated series, estimated by
/// non-overlapping batch means with `batches` batches.
pub fn batch_means_variance(values: &[f64], batches: usize) -> f64 {
    let size = values.len() / batches;
    assert!(size >= 2, "series too short for {batches} batches");
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(mean)
        .collect();
    variance(&means) / batches as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn interval_is_ordered() {
        let xs: Vec<f64> = (0..101).map(|i| ((i * 37) % 101) as f64).collect();
        let iv = credible_interval(&xs, 0.95);
        assert!(iv.lower <= iv.median && iv.median <= iv.upper);
        assert_eq!(iv.median, 50.0);
        assert!((iv.lower - 2.5).abs() < 1e-12);
    }

    #[test]
    fn zero_exclusion() {
        let a = Interval { median: 0.5, lower: 0.2, upper: 0.9 };
        let b = Interval { median: 0.1, lower: -0.1, upper: 0.3 };
        let c = Interval { median: 0.0, lower: 0.0, upper: 0.0 };
        assert!(a.excludes_zero());
        assert!(!b.excludes_zero());
        assert!(!c.excludes_zero());
    }
}
