//! Summary statistics and distribution distances used by the reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::statistics::{Data, OrderStatistics};

/// Mean, spread and quantiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `sqrt(variance / count)`.
    pub se: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl SummaryStats {
    /// Non-finite values are dropped. An empty sample gives NaN fields.
    pub fn of(values: &[f64]) -> Self {
        let xs: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let n = xs.len();
        if n == 0 {
            let nan = f64::NAN;
            return Self { count: 0, mean: nan, variance: nan, se: nan, q05: nan, q25: nan, q50: nan, q75: nan, q95: nan };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let mut data = Data::new(xs);
        Self {
            count: n,
            mean,
            variance,
            se: (variance / n as f64).sqrt(),
            q05: data.quantile(0.05),
            q25: data.quantile(0.25),
            q50: data.quantile(0.5),
            q75: data.quantile(0.75),
            q95: data.quantile(0.95),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Mean and standard error of a 0/1 sample with `hits` successes in `n`.
pub fn proportion(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Total variation distance between a law on `0..` and the empirical law of
/// `samples`. Mass of `law` beyond its length is taken as zero.
pub fn tv_distance(law: &[f64], samples: &[u64]) -> f64 {
    let n = samples.len() as f64;
    let top = samples.iter().copied().max().map_or(0, |m| m as usize + 1).max(law.len());
    let mut counts = vec![0u64; top];
    for &s in samples {
        counts[s as usize] += 1;
    }
    let missing = 1.0 - law.iter().sum::<f64>();
    let body: f64 = (0..top).map(|k| (law.get(k).copied().unwrap_or(0.0) - counts[k] as f64 / n).abs()).sum();
    0.5 * (body + missing.max(0.0))
}

/// Pearson chi-square goodness of fit of `samples` against `law`, pooling
/// cells so that every expected count is at least `min_expected`. Returns
/// `(statistic, degrees of freedom, p-value)`.
pub fn chi_square(law: &[f64], samples: &[u64], min_expected: f64) -> (f64, usize, f64) {
    let n = samples.len() as f64;
    let mut counts = vec![0u64; law.len() + 1];
    for &s in samples {
        let k = (s as usize).min(law.len());
        counts[k] += 1;
    }
    let mut expected: Vec<f64> = law.iter().map(|p| p * n).collect();
    expected.push((1.0 - law.iter().sum::<f64>()).max(0.0) * n);
    // pool adjacent cells left to right, folding a short tail into the last cell
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (ek, ok) in expected.iter().zip(&counts) {
        e += ek;
        o += *ok as f64;
        if e >= min_expected {
            cells.push((e, o));
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += e;
                last.1 += o;
            }
            None => cells.push((e, o)),
        }
    }
    let stat: f64 = cells.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p = if dof == 0 { 1.0 } else { 1.0 - ChiSquared::new(dof as f64).expect("dof").cdf(stat) };
    (stat, dof, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_sample() {
        let s = SummaryStats::of(&[1.0, 2.0, 3.0, 4.0, f64::NAN]);
        assert_eq!(s.count, 4);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.se - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
        assert!(s.q05 <= s.q25 && s.q25 <= s.q50 && s.q50 <= s.q75 && s.q75 <= s.q95);
        assert!((s.q50 - 2.5).abs() < 1e-12);
        assert!(SummaryStats::of(&[]).mean.is_nan());
    }

    #[test]
    fn tv_of_exact_sample_is_zero() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0, 1, 0, 1]), 0.0);
        assert!((tv_distance(&[1.0], &[1, 1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_square_accepts_matching_counts() {
        let law = [0.25, 0.5, 0.25];
        let samples: Vec<u64> = (0..400).map(|i| [0, 1, 1, 2][i % 4]).collect();
        let (stat, dof, p) = chi_square(&law, &samples, 5.0);
        assert!(stat.abs() < 1e-12);
        assert_eq!(dof, 2);
        assert!((p - 1.0).abs() < 1e-12);
    }
}
