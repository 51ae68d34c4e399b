//! Order-stable summary statistics for Monte Carlo output.

/// Neumaier-compensated sum. Summing a slice in index order gives the same
/// result no matter how the slice was produced.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sample mean, unbiased variance, and the standard errors of both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    /// Asymptotic standard error of the sample variance,
    /// `sqrt((m4 - s^4 (n-3)/(n-1)) / n)`.
    pub se_variance: f64,
}

impl SampleMoments {
    /// Requires at least two samples.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 2, "need at least two samples");
        let nf = n as f64;
        let mean = compensated_sum(xs.iter().copied()) / nf;
        let m2 = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / nf;
        let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / nf;
        let variance = m2 * nf / (nf - 1.0);
        let var_of_var = (m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf;
        Self {
            n,
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_variance: var_of_var.max(0.0).sqrt(),
        }
    }
}
