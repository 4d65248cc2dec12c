//! Exact laws for Brownian motion leaving a planar disk.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Exit point from the disk `|w - center| < radius` for motion started at
/// `z`, sampled from the Poisson kernel by pushing a uniform boundary point
/// through the disk automorphism that sends the center to `z`.
pub fn sample_disk_exit<R: Rng + ?Sized>(center: [f64; 2], radius: f64, z: [f64; 2], rng: &mut R) -> [f64; 2] {
    let (ar, ai) = ((z[0] - center[0]) / radius, (z[1] - center[1]) / radius);
    let phi = rng.random::<f64>() * 2.0 * PI;
    let (ui, ur) = phi.sin_cos();
    // (U + a) / (1 + conj(a) U)
    let (nr, ni) = (ur + ar, ui + ai);
    let (dr, di) = (1.0 + ar * ur + ai * ui, ar * ui - ai * ur);
    let den = dr * dr + di * di;
    let (qr, qi) = ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den);
    [center[0] + radius * qr, center[1] + radius * qi]
}

// J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt; the trapezoid rule on this
// periodic integrand converges geometrically once the node count exceeds x.
fn bessel_j(n: i32, x: f64) -> f64 {
    let m = (x.abs() as usize) + 64;
    let h = PI / m as f64;
    // endpoints t = 0 and t = pi
    let mut s = 0.5 * (1.0 + (n as f64 * PI).cos());
    for k in 1..m {
        let t = k as f64 * h;
        s += (n as f64 * t - x * t.sin()).cos();
    }
    s * h / PI
}

struct ExitTable {
    /// Times and the matching CDF values, both increasing.
    t: Vec<f64>,
    cdf: Vec<f64>,
    /// Survival beyond the table is c e^{-rate t}.
    rate: f64,
}

const N_ZEROS: usize = 400;
const T_MIN: f64 = 0.004;
const T_MAX: f64 = 4.0;

fn exit_table() -> &'static ExitTable {
    static TABLE: OnceLock<ExitTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Zeros of J0 by Newton from McMahon's estimate, with coefficients
        // 2 / (j J1(j)) of the survival series.
        let mut zeros = Vec::with_capacity(N_ZEROS);
        for n in 1..=N_ZEROS {
            let b = (n as f64 - 0.25) * PI;
            let mut j = b + 1.0 / (8.0 * b);
            for _ in 0..8 {
                j += bessel_j(0, j) / bessel_j(1, j);
            }
            zeros.push((j, 2.0 / (j * bessel_j(1, j))));
        }
        let survival = |t: f64| -> f64 { zeros.iter().map(|&(j, c)| c * (-j * j * t / 2.0).exp()).sum() };
        let n = 8192;
        let mut t = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        for i in 0..=n {
            // denser near the left end where the CDF turns on
            let x = i as f64 / n as f64;
            let ti = T_MIN + (T_MAX - T_MIN) * x * x;
            let f = (1.0 - survival(ti)).clamp(0.0, 1.0);
            t.push(ti);
            cdf.push(f);
        }
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        ExitTable { t, cdf, rate: zeros[0].0 * zeros[0].0 / 2.0 }
    })
}

/// Exit time of planar Brownian motion (generator `Delta/2`) from the unit
/// disk, started at the center. Mean `1/2`.
pub fn unit_disk_exit_time<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let tab = exit_table();
    let u: f64 = rng.random();
    let last = *tab.cdf.last().expect("table");
    if u >= last {
        // Beyond the table only the leading exponential mode survives.
        let exp = Exp::new(tab.rate).expect("positive rate");
        return T_MAX + exp.sample(rng);
    }
    if u <= tab.cdf[0] {
        return tab.t[0];
    }
    let i = tab.cdf.partition_point(|&c| c < u);
    let (c0, c1) = (tab.cdf[i - 1], tab.cdf[i]);
    let (t0, t1) = (tab.t[i - 1], tab.t[i]);
    if c1 > c0 {
        t0 + (t1 - t0) * (u - c0) / (c1 - c0)
    } else {
        t1
    }
}

/// Time for spherical Brownian motion to leave the geodesic cap of radius
/// `radius` from its center.
///
/// Uses the planar exit-time law rescaled so its mean equals the exact
/// spherical mean `-4 log cos(radius / 2)`; the two laws differ at relative
/// order `radius^2` beyond the mean.
pub fn cap_exit_time<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> f64 {
    let mean = -4.0 * (radius / 2.0).cos().ln();
    2.0 * mean * unit_disk_exit_time(rng)
}
