//! Sample statistics for Monte Carlo estimates.

use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, n }
    }

    /// Standardized distance from `target`. Zero error and exact agreement give 0;
    /// zero error with disagreement gives ±∞.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Unbiased sample variance with a fourth-moment standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub std_error: f64,
    pub n: usize,
}

impl VarianceEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n < 2 {
            return Self {
                variance: f64::NAN,
                std_error: f64::NAN,
                n,
            };
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
            let d = (x - mean) * (x - mean);
            (a + d, b + d * d)
        });
        let variance = m2 / (nf - 1.0);
        let mu2 = m2 / nf;
        let mu4 = m4 / nf;
        let std_error = ((mu4 - mu2 * mu2).max(0.0) / nf).sqrt();
        Self {
            variance,
            std_error,
            n,
        }
    }

    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.variance - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}
