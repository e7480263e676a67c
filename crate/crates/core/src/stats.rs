//! Order-stable ensemble reductions.
//!
//! Sums use Neumaier compensation so that ensemble means are reproducible to
//! the last bit for a fixed input order and insensitive to cancellation.

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().total()
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_slice(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                count,
            };
        }
        let n = count as f64;
        let mean = compensated_sum(values.iter().copied()) / n;
        let std_error = if count > 1 {
            let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            count,
        }
    }

    /// `mean / std_error`, with the convention that an exact zero-variance
    /// sample has z = 0 when its mean vanishes to `zero_tol`.
    pub fn z_score(&self, zero_tol: f64) -> f64 {
        if self.std_error > 0.0 {
            self.mean / self.std_error
        } else if self.mean.abs() <= zero_tol {
            0.0
        } else {
            self.mean.signum() * f64::INFINITY
        }
    }
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let denom = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let num = compensated_sum(values.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)));
    if denom == 0.0 {
        0.0
    } else {
        num / denom
    }
}
