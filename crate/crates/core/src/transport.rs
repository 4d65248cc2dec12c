//! Wasserstein-1 distances between angle measures on `[0, 2pi]`, viewed as
//! measures on the line.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Sorted sample of angles in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalAngles {
    values: Vec<f64>,
}

impl EmpiricalAngles {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && **v < TAU)) {
            return Err(domain(format!("angle {bad} outside [0, 2pi)")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Wraps arbitrary reals into `[0, 2pi)` first.
    pub fn from_wrapped(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(values.into_iter().map(wrap_angle).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps any real angle into `[0, 2pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Exit-angle law of planar Brownian motion started at radius `ratio * R`
/// on the ray of angle 0, leaving the disk of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefMeasure {
    pub ratio: f64,
}

impl RefMeasure {
    pub fn density(&self, theta: f64) -> f64 {
        let r = self.ratio;
        (1.0 - r * r) / (TAU * (1.0 - 2.0 * r * theta.cos() + r * r))
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        if theta >= TAU {
            return 1.0;
        }
        let c = (1.0 + self.ratio) / (1.0 - self.ratio);
        if theta <= PI {
            (c * (theta / 2.0).tan()).atan() / PI
        } else {
            1.0 - (c * ((TAU - theta) / 2.0).tan()).atan() / PI
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return TAU;
        }
        let c = (1.0 - self.ratio) / (1.0 + self.ratio);
        if u <= 0.5 {
            2.0 * (c * (PI * u).tan()).atan()
        } else {
            TAU - 2.0 * (c * (PI * (1.0 - u)).tan()).atan()
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        wrap_angle(self.quantile(rng.random::<f64>()))
    }
}

/// The reference measure for consecutive radii with ratio `ratio`.
pub fn nu_k(ratio: f64) -> Result<RefMeasure> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(domain(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    Ok(RefMeasure { ratio })
}

/// `W_1` between equal-size empirical measures: mean absolute difference of
/// order statistics.
pub fn wasserstein1(mu: &EmpiricalAngles, nu: &EmpiricalAngles) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::SizeMismatch { left: mu.len(), right: nu.len() });
    }
    if mu.is_empty() {
        return Ok(0.0);
    }
    Ok(mu.values.iter().zip(&nu.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / mu.len() as f64)
}

/// Distance to a continuous measure with an error bound on the quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Estimate {
    pub value: f64,
    pub error_bound: f64,
}

const GL3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn gauss<F: Fn(f64) -> f64>(rule: &[(f64, f64)], a: f64, b: f64, f: F) -> f64 {
    let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.iter().map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// `W_1(mu, ref) = ∫ |F_mu - F_ref|` over `[0, 2pi]`.
///
/// Between consecutive sample points the empirical cdf is constant; each
/// such interval is split where the reference cdf crosses that constant, so
/// the integrand is smooth on every piece. Five- and three-point
/// Gauss-Legendre rules give the value and its error estimate.
pub fn wasserstein1_ref(mu: &EmpiricalAngles, reference: &RefMeasure) -> Result<W1Estimate> {
    if mu.is_empty() {
        return Err(domain("empty sample"));
    }
    let n = mu.len() as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut left = 0.0;
    for i in 0..=mu.len() {
        let right = if i < mu.len() { mu.values[i] } else { TAU };
        if right > left {
            let level = i as f64 / n;
            let cross = reference.quantile(level);
            let mut piece = |a: f64, b: f64| {
                if b > a {
                    let f = |t: f64| (level - reference.cdf(t)).abs();
                    let v5 = gauss(&GL5, a, b, f);
                    let v3 = gauss(&GL3, a, b, f);
                    value += v5;
                    err += (v5 - v3).abs();
                }
            };
            if cross > left && cross < right {
                piece(left, cross);
                piece(cross, right);
            } else {
                piece(left, right);
            }
        }
        left = left.max(right);
    }
    Ok(W1Estimate { value, error_bound: err })
}

/// Threshold `c0 log(k) / (2 sqrt n)` of the concentration event.
pub fn wasserstein_threshold(n: usize, k: u32, c0: f64) -> f64 {
    c0 * (k as f64).ln() / (2.0 * (n as f64).sqrt())
}

/// True iff the sample is within the concentration threshold of `reference`.
pub fn wasserstein_event(samples: &EmpiricalAngles, reference: &RefMeasure, n: usize, k: u32, c0: f64) -> Result<bool> {
    if samples.len() != n {
        return Err(Error::SizeMismatch { left: samples.len(), right: n });
    }
    Ok(wasserstein1_ref(samples, reference)?.value <= wasserstein_threshold(n, k, c0))
}

/// Rank-matching permutation: `mu[i]` is sent to `nu[perm[i]]`.
pub fn coupling_permutation(mu: &[f64], nu: &[f64]) -> Result<Vec<usize>> {
    if mu.len() != nu.len() {
        return Err(Error::SizeMismatch { left: mu.len(), right: nu.len() });
    }
    let order = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
        idx
    };
    let (om, on) = (order(mu), order(nu));
    let mut perm = vec![0; mu.len()];
    for (a, b) in om.into_iter().zip(on) {
        perm[a] = b;
    }
    Ok(perm)
}

/// Mean `|mu[i] - nu[perm[i]]|`.
pub fn transport_cost(mu: &[f64], nu: &[f64], perm: &[usize]) -> Result<f64> {
    if mu.len() != nu.len() || perm.len() != mu.len() {
        return Err(Error::SizeMismatch { left: mu.len(), right: nu.len() });
    }
    if mu.is_empty() {
        return Ok(0.0);
    }
    Ok(mu.iter().zip(perm).map(|(a, &j)| (a - nu[j]).abs()).sum::<f64>() / mu.len() as f64)
}

/// Fits `c0` so that `P(sqrt(n) W_1 > c0 x) <= 2 exp(-x^2)` on the grid of
/// `x`, given calibration draws of `sqrt(n) W_1`, inflated by `margin`.
pub fn fit_c0(scaled_distances: &[f64], xs: &[f64], margin: f64) -> Result<f64> {
    if scaled_distances.is_empty() || xs.is_empty() {
        return Err(domain("need calibration draws and a nonempty x grid"));
    }
    let mut d = scaled_distances.to_vec();
    d.sort_by(f64::total_cmp);
    let mut c0: f64 = 0.0;
    for &x in xs {
        let exceed = (2.0 * (-x * x).exp()).min(1.0);
        let q = 1.0 - exceed;
        let idx = ((q * d.len() as f64).ceil() as usize).min(d.len() - 1);
        c0 = c0.max(d[idx] / x);
    }
    Ok(c0 * margin)
}
