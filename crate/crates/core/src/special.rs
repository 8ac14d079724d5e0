//! Scalar helpers: standard normal distribution, log-sum-exp and the
//! one-sample Kolmogorov-Smirnov test used by the uniformity checks.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

/// 1 / sqrt(2 pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Lower tail `P(Z <= z)`, accurate in relative terms for negative `z`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `P(Z > z)`, accurate in relative terms for positive `z`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// `P(lo < Z <= hi)` evaluated on whichever tail keeps the difference exact.
pub fn normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        (normal_sf(lo) - normal_sf(hi)).max(0.0)
    } else if hi <= 0.0 {
        (normal_cdf(hi) - normal_cdf(lo)).max(0.0)
    } else {
        (1.0 - normal_cdf(lo) - normal_sf(hi)).max(0.0)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `x * log2(x)` with the `0 log 0 = 0` convention.
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    /// Sup distance between the empirical CDF and Uniform[0,1].
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

impl KsOutcome {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// One-sample KS test of `samples` against Uniform[0,1].
///
/// The p-value uses the asymptotic Kolmogorov distribution with the
/// Stephens small-sample correction.
pub fn ks_uniform(samples: &mut [f64]) -> KsOutcome {
    let n = samples.len();
    if n == 0 {
        return KsOutcome {
            statistic: 0.0,
            p_value: 1.0,
            samples: 0,
        };
    }
    samples.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d = 0.0f64;
    for (k, &x) in samples.iter().enumerate() {
        let x = x.clamp(0.0, 1.0);
        let above = (k as f64 + 1.0) / nf - x;
        let below = x - k as f64 / nf;
        d = d.max(above).max(below);
    }
    let root = nf.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        samples: n,
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form converges faster for small arguments.
        let t = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 0..50 {
            let odd = (2 * k + 1) as f64;
            sum += (t * odd * odd).exp();
        }
        let cdf = (2.0 * PI).sqrt() / lambda * sum;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-300 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &z in &[-8.0, -2.5, -0.3, 0.0, 0.7, 3.0, 9.0] {
            assert!((normal_cdf(z) + normal_sf(z) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn deep_tail_keeps_relative_accuracy() {
        // Phi(-10) = 7.619853024160527e-24
        let v = normal_cdf(-10.0);
        assert!((v / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12, "{v:e}");
        assert!((normal_sf(10.0) / v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interval_matches_difference() {
        let p = normal_interval(-1.0, 2.0);
        assert!((p - (normal_cdf(2.0) - normal_cdf(-1.0))).abs() < 1e-15);
        assert_eq!(normal_interval(1.0, 1.0), 0.0);
        assert!((normal_interval(f64::NEG_INFINITY, f64::INFINITY) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let a = kolmogorov_sf(1.179_999);
        let b = kolmogorov_sf(1.180_001);
        assert!((a - b).abs() < 1e-5, "{a} {b}");
        // Critical value at alpha = 0.01 is 1.6276.
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        // Critical value at alpha = 0.05 is 1.3581.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn ks_rejects_skewed_sample() {
        let mut uniform: Vec<f64> = (0..10_000).map(|k| (k as f64 + 0.5) / 10_000.0).collect();
        assert!(ks_uniform(&mut uniform).passes(0.01));
        let mut skewed: Vec<f64> = uniform.iter().map(|x| x * x).collect();
        assert!(!ks_uniform(&mut skewed).passes(0.01));
    }
}
