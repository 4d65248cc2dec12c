//! Critical Galton-Watson process with Geometric(1/2) offspring.
//!
//! This is the exact law of nested traversal counts: started from `n`
//! traversals at one level, the counts at successive deeper levels evolve as
//! this branching process. Generation 0 holds the initial count.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default bound on the truncated tail mass.
pub const DEFAULT_LOST_MASS_BOUND: f64 = 1e-12;

// Row windows stop once the kernel itself drops below this value.
const ROW_CUTOFF: f64 = 1e-300;

/// `P(offspring = k) = 2^{-(k+1)}`.
pub fn offspring_pmf(k: u64) -> f64 {
    0.5f64.powi(k as i32 + 1)
}

/// Offspring generating function `f(s) = 1 / (2 - s)`.
pub fn offspring_pgf(s: f64) -> f64 {
    1.0 / (2.0 - s)
}

/// Truncation level used for a process started at `n` and run `l`
/// generations: `max(8n, n + 40 sqrt(n l), 40 (l + 1))`. The last term covers
/// small `n`, where surviving lines grow like `l` times an exponential.
pub fn truncation_cap(n: u64, l: u32) -> usize {
    let n = n as f64;
    let l = l as f64;
    let cap = (8.0 * n).max(n + 40.0 * (n * l).sqrt()).max(40.0 * (l + 1.0));
    (cap.ceil() as usize).max(64)
}

/// A probability vector on counts `0..=cap` plus the mass pushed past `cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDist {
    pub probs: Vec<f64>,
    pub lost_mass: f64,
    pub lost_mass_bound: f64,
}

impl CountDist {
    /// All mass on `n`, supported on `0..=cap`.
    pub fn point(n: usize, cap: usize) -> Self {
        let cap = cap.max(n);
        let mut probs = vec![0.0; cap + 1];
        probs[n] = 1.0;
        Self { probs, lost_mass: 0.0, lost_mass_bound: DEFAULT_LOST_MASS_BOUND }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.lost_mass_bound = bound;
        self
    }

    pub fn cap(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }
}

/// Adds `weight * NegBin(n, 1/2)` into `out`, returning the weight that
/// landed beyond `out.len() - 1`.
///
/// The row is evaluated from its mode outward with ratio recurrences, seeded
/// in log space so large `n` cannot underflow, and renormalized over the
/// evaluated window.
pub(crate) fn add_offspring_row(n: usize, weight: f64, out: &mut [f64], row: &mut Vec<f64>) -> f64 {
    if n == 0 {
        out[0] += weight;
        return 0.0;
    }
    let cap = out.len() - 1;
    let nf = n as f64;
    let mode = n - 1;
    let log_mode = ln_gamma(nf + mode as f64) - ln_gamma(mode as f64 + 1.0) - ln_gamma(nf)
        - (nf + mode as f64) * std::f64::consts::LN_2;
    let pm = log_mode.exp();

    // Left half, collected in reverse.
    row.clear();
    let mut p = pm;
    let mut k = mode;
    while k > 0 {
        p *= 2.0 * k as f64 / (nf + k as f64 - 1.0);
        k -= 1;
        if p < ROW_CUTOFF {
            break;
        }
        row.push(p);
    }
    let left_len = row.len();
    let lo = mode - left_len;
    row.reverse();
    row.push(pm);
    let mut p = pm;
    let mut k = mode;
    loop {
        p *= (nf + k as f64) / (2.0 * (k as f64 + 1.0));
        k += 1;
        if p < ROW_CUTOFF {
            break;
        }
        row.push(p);
    }
    let norm: f64 = row.iter().sum();
    let scale = weight / norm;
    let mut lost = 0.0;
    for (i, &v) in row.iter().enumerate() {
        let k = lo + i;
        if k <= cap {
            out[k] += v * scale;
        } else {
            lost += v * scale;
        }
    }
    lost
}

/// One generation: each of the `n` individuals has an independent
/// Geometric(1/2) number of children.
pub fn gw_step_exact(dist: &CountDist) -> Result<CountDist> {
    let mut out = vec![0.0; dist.probs.len()];
    let mut row = Vec::new();
    let mut lost = dist.lost_mass;
    for (n, &q) in dist.probs.iter().enumerate() {
        if q > 0.0 {
            lost += add_offspring_row(n, q, &mut out, &mut row);
        }
    }
    if lost > dist.lost_mass_bound {
        return Err(Error::TruncationOverflow { lost, bound: dist.lost_mass_bound });
    }
    Ok(CountDist { probs: out, lost_mass: lost, lost_mass_bound: dist.lost_mass_bound })
}

/// Law of generation `l` started from `n`, truncated at [`truncation_cap`].
pub fn law_after(n: u64, l: u32) -> Result<CountDist> {
    let mut d = CountDist::point(n as usize, truncation_cap(n, l));
    for _ in 0..l {
        d = gw_step_exact(&d)?;
    }
    Ok(d)
}

/// `P_n(T_l = 0) = (l / (l + 1))^n`.
///
/// With generation 0 holding `n`, this is the `(1 - 1/L)^n` extinction
/// formula for traversal counts when `l = L - 1`, i.e. when the top level of
/// the cascade is indexed 1.
pub fn extinction_prob(n: u64, l: u32) -> f64 {
    let lf = l as f64;
    (lf / (lf + 1.0)).powf(n as f64)
}

/// Exact `P_n(|sqrt(2 T_l) - sqrt(2 n)| >= theta)` from the truncated law.
/// Truncated mass counts toward the tail when the truncation point itself
/// already lies in it.
pub fn deviation_tail(n: u64, l: u32, theta: f64) -> Result<f64> {
    let d = law_after(n, l)?;
    let root = (2.0 * n as f64).sqrt();
    let mut tail: f64 = d
        .probs
        .iter()
        .enumerate()
        .filter(|(k, _)| ((2.0 * *k as f64).sqrt() - root).abs() >= theta)
        .map(|(_, p)| p)
        .sum();
    if (2.0 * (d.cap() + 1) as f64).sqrt() - root >= theta {
        tail += d.lost_mass;
    }
    Ok(tail.min(1.0))
}

/// Counts `T_0..=T_L` of one sampled process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GWPath {
    pub counts: Vec<u64>,
}

impl GWPath {
    pub fn is_extinct_at(&self, l: usize) -> bool {
        self.counts[l] == 0
    }
}

/// Total offspring of `n` individuals. Exact in law: a sum of geometric
/// variates for small `n`, the Gamma-Poisson mixture otherwise.
pub fn sample_offspring_total<R: Rng + ?Sized>(n: u64, rng: &mut R) -> u64 {
    sample_negbin(n, 0.5, rng)
}

/// Sum of `n` independent Geometric variates with `P(k) = (1 - q) q^k`.
pub(crate) fn sample_negbin<R: Rng + ?Sized>(n: u64, q: f64, rng: &mut R) -> u64 {
    if n == 0 || q <= 0.0 {
        return 0;
    }
    if n <= 32 {
        let g = Geometric::new(1.0 - q).expect("valid success probability");
        return (0..n).map(|_| g.sample(rng)).sum();
    }
    let lambda = Gamma::new(n as f64, q / (1.0 - q)).expect("valid gamma").sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

/// Samples `T_0 = n, T_1, ..., T_L`.
pub fn sample_gw_path<R: Rng + ?Sized>(n: u64, levels: usize, rng: &mut R) -> GWPath {
    let mut counts = Vec::with_capacity(levels + 1);
    counts.push(n);
    let mut cur = n;
    for _ in 0..levels {
        cur = sample_offspring_total(cur, rng);
        counts.push(cur);
    }
    GWPath { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn offspring_law() {
        assert_eq!(offspring_pmf(0), 0.5);
        let mean: f64 = (0..=60).map(|k| k as f64 * offspring_pmf(k)).sum();
        assert!((mean - 1.0).abs() < 1e-12);
        assert!((offspring_pgf(offspring_pgf(0.0)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((extinction_prob(1, 2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_step_examples() {
        let d = gw_step_exact(&CountDist::point(0, 64)).unwrap();
        assert_eq!(d.probs[0], 1.0);
        let d = gw_step_exact(&CountDist::point(2, 64)).unwrap();
        assert!((d.probs[0] - 0.25).abs() < 1e-15);
        let d = gw_step_exact(&CountDist::point(1, 64)).unwrap();
        for k in 0..30 {
            assert!((d.probs[k] - offspring_pmf(k as u64)).abs() < 1e-15);
        }
    }

    #[test]
    fn negbin_rows_match_closed_form() {
        // C(n+k-1, k) 2^{-(n+k)} evaluated directly in log space.
        let direct = |n: usize, k: usize| {
            (ln_gamma((n + k) as f64) - ln_gamma(k as f64 + 1.0) - ln_gamma(n as f64)
                - (n + k) as f64 * std::f64::consts::LN_2)
                .exp()
        };
        for n in [1usize, 3, 17, 400, 5000] {
            let mut out = vec![0.0; 20 * n + 2000];
            let mut row = Vec::new();
            let lost = add_offspring_row(n, 1.0, &mut out, &mut row);
            assert_eq!(lost, 0.0);
            for k in [0, n / 2, n, 2 * n, 3 * n] {
                let want = direct(n, k);
                let got = out[k];
                // ratio recursion accumulates about one ulp per step
                assert!((got - want).abs() <= 1e-10 * want.max(1e-300), "n={n} k={k}: {got} vs {want}");
            }
            assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extinction_matches_dp() {
        for n in [0u64, 1, 5, 20, 50] {
            for l in [1u32, 2, 10, 30] {
                let d = law_after(n, l).unwrap();
                assert!((d.probs[0] - extinction_prob(n, l)).abs() < 1e-10, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn mass_and_mean_are_conserved() {
        for (n, l) in [(5u64, 10u32), (200, 5), (50, 10)] {
            let d = law_after(n, l).unwrap();
            assert!((d.total() + d.lost_mass - 1.0).abs() < 1e-12);
            assert!(d.lost_mass < 1e-12);
            assert!((d.mean() - n as f64).abs() < 1e-9 * n as f64, "mean {}", d.mean());
        }
    }

    #[test]
    fn overflow_is_reported() {
        let d = CountDist::point(50, 60);
        assert!(matches!(gw_step_exact(&d), Err(Error::TruncationOverflow { .. })));
    }

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation_tail(10, 3, 0.0).unwrap(), 1.0);
        let v = deviation_tail(200, 5, 6.0).unwrap();
        assert!(v <= 10.0 * (-36.0f64 / 10.0).exp());
        let mut prev = 1.0;
        for t in 0..12 {
            let v = deviation_tail(50, 5, t as f64 * 0.75).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn sampled_paths() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        assert_eq!(sample_gw_path(0, 5, &mut rng).counts, vec![0; 6]);
        let n_paths = 20_000;
        let mut extinct = 0;
        for _ in 0..n_paths {
            let p = sample_gw_path(20, 10, &mut rng);
            for w in p.counts.windows(2) {
                assert!(w[0] != 0 || w[1] == 0);
            }
            extinct += p.is_extinct_at(10) as usize;
        }
        let want = extinction_prob(20, 10);
        let se = (want * (1.0 - want) / n_paths as f64).sqrt();
        let got = extinct as f64 / n_paths as f64;
        assert!((got - want).abs() < 3.0 * se, "{got} vs {want}");
    }

    #[test]
    fn large_n_sampler_mean_and_variance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let n = 500u64;
        let m = 20_000;
        let xs: Vec<f64> = (0..m).map(|_| sample_offspring_total(n, &mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        // NegBin(n, 1/2): mean n, variance 2n
        assert!((mean - 500.0).abs() < 4.0 * (1000.0f64 / m as f64).sqrt());
        assert!((var / 1000.0 - 1.0).abs() < 0.05);
    }
}
