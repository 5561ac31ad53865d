//! Binomial confidence intervals and plug-in mutual information.

use serde::{Deserialize, Serialize};

/// z-score of the two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval {
            low: 0.0,
            high: 1.0,
        };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        low: (centre - half).max(0.0),
        high: (centre + half).min(1.0),
    }
}

/// Standard deviation of a binomial proportion with true rate `p` over `n` trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// True when `observed` lies within `k` binomial sigmas of `expected`.
pub fn within_sigma(observed: f64, expected: f64, n: u64, k: f64) -> bool {
    (observed - expected).abs() <= k * binomial_sigma(expected, n)
}

/// Joint histogram of two discrete variables with small alphabets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCounts {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl JointCounts {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            counts: vec![0; rows * cols],
        }
    }

    pub fn add(&mut self, x: usize, y: usize) {
        assert!(x < self.rows && y < self.cols, "symbol out of alphabet");
        self.counts[x * self.cols + y] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Plug-in estimate of I(X;Y) in bits.
    pub fn mutual_information(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        let cells = || {
            self.counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (i / self.cols, i % self.cols, c))
        };
        let mut px = vec![0u64; self.rows];
        let mut py = vec![0u64; self.cols];
        for (x, y, c) in cells() {
            px[x] += c;
            py[y] += c;
        }
        let mut mi = 0.0;
        for (x, y, c) in cells().filter(|t| t.2 > 0) {
            let pxy = c as f64 / n;
            let ratio = (c as f64 * n) / (px[x] as f64 * py[y] as f64);
            mi += pxy * ratio.log2();
        }
        mi.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wilson_known_value() {
        // 10/100 at 95%: reference interval [0.05523, 0.17437]
        let iv = wilson_interval(10, 100, Z_95);
        assert_abs_diff_eq!(iv.low, 0.05523, epsilon = 1e-5);
        assert_abs_diff_eq!(iv.high, 0.17437, epsilon = 1e-5);
    }

    #[test]
    fn wilson_edges() {
        let iv = wilson_interval(0, 50, Z_95);
        assert_abs_diff_eq!(iv.low, 0.0, epsilon = 1e-15);
        assert!(iv.high > 0.0);
        assert_eq!(
            wilson_interval(0, 0, Z_95),
            Interval {
                low: 0.0,
                high: 1.0
            }
        );
    }

    #[test]
    fn mi_of_identical_and_independent() {
        let mut same = JointCounts::new(4, 4);
        let mut indep = JointCounts::new(4, 4);
        for x in 0..4 {
            for y in 0..4 {
                same.add(x, x);
                indep.add(x, y);
            }
        }
        assert_abs_diff_eq!(same.mutual_information(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(indep.mutual_information(), 0.0, epsilon = 1e-12);
        assert_eq!(JointCounts::new(2, 2).mutual_information(), 0.0);
    }

    #[test]
    fn sigma_band() {
        assert!(within_sigma(0.25, 0.25, 100, 3.0));
        assert!(!within_sigma(0.40, 0.25, 10_000, 3.0));
    }
}
