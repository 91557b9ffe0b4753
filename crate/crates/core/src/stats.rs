//! Sample statistics shared by the Monte-Carlo estimators.

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub const fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    /// `|self - reference| / stderr`; infinite when the error is zero and the
    /// values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.value - reference).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (zero for fewer than two samples).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample mean with its standard error.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len().max(1) as f64;
    Estimate::new(mean(xs), libm::sqrt(sample_variance(xs) / n))
}

/// Ratio-of-means estimator `mean(num) / (mean(den) + offset)` with a
/// delete-one jackknife standard error.
pub fn ratio_of_means(num: &[f64], den: &[f64], offset: f64) -> Estimate {
    assert_eq!(num.len(), den.len(), "ratio_of_means needs paired samples");
    let n = num.len();
    let total_num: f64 = num.iter().sum();
    let total_den: f64 = den.iter().sum();
    let ratio = (total_num / n as f64) / (total_den / n as f64 + offset);
    if n < 2 {
        return Estimate::new(ratio, 0.0);
    }
    let m = (n - 1) as f64;
    let leave_one_out = |i: usize| ((total_num - num[i]) / m) / ((total_den - den[i]) / m + offset);
    let jack_mean = (0..n).map(leave_one_out).sum::<f64>() / n as f64;
    let ss: f64 = (0..n)
        .map(|i| {
            let d = leave_one_out(i) - jack_mean;
            d * d
        })
        .sum();
    Estimate::new(ratio, libm::sqrt(ss * m / n as f64))
}

/// Maps a SINR estimate to `log2(1 + SINR)` with a delta-method error.
pub fn se_from_sinr(sinr: Estimate) -> Estimate {
    let v = sinr.value.max(0.0);
    Estimate::new(
        libm::log2(1.0 + v),
        sinr.stderr / ((1.0 + v) * core::f64::consts::LN_2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_constant_ratio_is_zero() {
        let num = [2.0, 4.0, 6.0];
        let den = [1.0, 2.0, 3.0];
        let e = ratio_of_means(&num, &den, 0.0);
        assert!((e.value - 2.0).abs() < 1e-15);
        assert!(e.stderr < 1e-12);
    }

    #[test]
    fn jackknife_matches_mean_stderr_for_unit_denominator() {
        // with den ≡ 1 and offset 0 the jackknife reduces to the usual s/√n
        let num = [1.0, 3.0, 2.0, 7.0, 4.0];
        let e = ratio_of_means(&num, &[1.0; 5], 0.0);
        let m = mean_estimate(&num);
        assert!((e.value - m.value).abs() < 1e-12);
        assert!((e.stderr - m.stderr).abs() < 1e-12);
    }

    #[test]
    fn variance_basics() {
        assert_eq!(sample_variance(&[1.0]), 0.0);
        assert!((sample_variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
    }
}
