//! Monte-Carlo summaries: Wilson intervals, normal-theory means, streaming
//! cross moments about known centers, and the one-sample Kolmogorov–Smirnov
//! test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// `z` for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Interval { lo, hi }
}

/// A proportion with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci: Interval,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Proportion {
        let estimate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Proportion { successes, trials, estimate, ci: wilson(successes, trials, Z95) }
    }

    pub fn from_flags(flags: &[bool]) -> Proportion {
        Self::new(flags.iter().filter(|f| **f).count() as u64, flags.len() as u64)
    }

    /// Standard error `√(p(1−p)/N)`.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return f64::INFINITY;
        }
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Welford accumulator for a scalar.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> MeanVar {
        MeanVar::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn from_slice(xs: &[f64]) -> MeanVar {
        let mut m = MeanVar::new();
        xs.iter().for_each(|x| m.push(*x));
        m
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n - 1) as f64
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn summary(&self) -> MeanEstimate {
        let se = self.std_error();
        MeanEstimate { mean: self.mean, std_error: se, n: self.n, ci: Interval { lo: self.mean - Z95 * se, hi: self.mean + Z95 * se } }
    }
}

/// Normal-theory mean estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub ci: Interval,
}

/// Sums of `(X_i − c_i)(Y_j − d_j)` and their squares, for entrywise
/// covariance estimates with standard errors when the means are known.
#[derive(Clone, Debug)]
pub struct CrossMoments {
    cx: Vec<f64>,
    cy: Vec<f64>,
    n: u64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl CrossMoments {
    pub fn new(cx: Vec<f64>, cy: Vec<f64>) -> CrossMoments {
        let m = cx.len() * cy.len();
        CrossMoments { cx, cy, n: 0, sum: vec![0.0; m], sumsq: vec![0.0; m] }
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) {
        assert_eq!(x.len(), self.cx.len());
        assert_eq!(y.len(), self.cy.len());
        self.n += 1;
        let ny = self.cy.len();
        for (i, (xi, ci)) in x.iter().zip(&self.cx).enumerate() {
            let a = xi - ci;
            for (j, (yj, dj)) in y.iter().zip(&self.cy).enumerate() {
                let z = a * (yj - dj);
                self.sum[i * ny + j] += z;
                self.sumsq[i * ny + j] += z * z;
            }
        }
    }

    /// Merges another accumulator with the same centers.
    pub fn merge(&mut self, other: &CrossMoments) {
        self.n += other.n;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.sumsq.iter_mut().zip(&other.sumsq).for_each(|(a, b)| *a += b);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cx.len(), self.cy.len())
    }

    pub fn estimate(&self, i: usize, j: usize) -> f64 {
        self.sum[i * self.cy.len() + j] / self.n as f64
    }

    pub fn std_error(&self, i: usize, j: usize) -> f64 {
        let n = self.n as f64;
        let m = self.estimate(i, j);
        let var = (self.sumsq[i * self.cy.len() + j] / n - m * m).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }

    /// Largest `|estimate − exact| / se` over all entries.
    pub fn max_z(&self, exact: impl Fn(usize, usize) -> f64) -> f64 {
        let (a, b) = self.dims();
        let mut worst = 0.0f64;
        for i in 0..a {
            for j in 0..b {
                let se = self.std_error(i, j).max(1e-300);
                worst = worst.max((self.estimate(i, j) - exact(i, j)).abs() / se);
            }
        }
        worst
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Result of a one-sample Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// KS test of `xs` against the continuous CDF `cdf`; the p-value uses the
/// asymptotic Kolmogorov distribution with the Stephens correction.
pub fn ks_test(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sn = nf.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    KsResult { statistic: d, p_value: kolmogorov_survival(lambda), n }
}

/// `P(K > λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2 j² λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let t = (-2.0 * jf * jf * lambda * lambda).exp();
        s += if j % 2 == 1 { t } else { -t };
        if t < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Empirical quantile by linear interpolation of the order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile(&v, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basics() {
        let i = wilson(0, 100, Z95);
        assert_eq!(i.lo, 0.0);
        assert!(i.hi > 0.0 && i.hi < 0.05);
        let j = wilson(50, 100, Z95);
        assert!(j.contains(0.5) && j.width() < 0.2);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0];
        let m = MeanVar::from_slice(&xs);
        assert!((m.mean() - 5.0).abs() < 1e-15);
        let v: f64 = xs.iter().map(|x| (x - 5.0) * (x - 5.0)).sum::<f64>() / 4.0;
        assert!((m.variance() - v).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_tail_values() {
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 1e-3);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_test(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.99);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }
}
