//! Scale constants, barrier curves and barrier events for the traversal
//! process, with exact probabilities by dynamic programming and Monte Carlo
//! cross-checks.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::gw::{self, CountDist};

/// Exponent of the lower barrier `alpha`.
pub const ALPHA_EXPONENT: f64 = 0.4;
/// Exponent of the upper-side barrier `gamma`.
pub const GAMMA_EXPONENT: f64 = 0.25;
/// Default cap on DP entries per level.
pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

/// `rho_L = 2 - log L / (2L)`.
pub fn rho(levels: u32) -> f64 {
    let l = levels as f64;
    2.0 - l.ln() / (2.0 * l)
}

/// `t_z = (rho_L L + z)^2 / 2`.
pub fn t_z(levels: u32, z: f64) -> f64 {
    (rho(levels) * levels as f64 + z).powi(2) / 2.0
}

/// `s_L(z) = L (2L - log L + z)`.
pub fn s_l(levels: u32, z: f64) -> f64 {
    let l = levels as f64;
    l * (2.0 * l - l.ln() + z)
}

/// Cover-time centering `2 sqrt 2 (log 1/eps - (1/4) log log 1/eps)`.
pub fn m_eps(eps: f64) -> f64 {
    let li = (1.0 / eps).ln();
    2.0 * std::f64::consts::SQRT_2 * (li - 0.25 * li.ln())
}

/// `l ∧ (L - l)`.
pub fn l_wedge(l: u32, levels: u32) -> f64 {
    l.min(levels.saturating_sub(l)) as f64
}

/// `N_{k,a} = floor((rho_L (L - k) + a + 1)^2 / 2)`.
#[allow(non_snake_case)]
pub fn N_ka(k: u32, a: f64, levels: u32) -> Result<u64> {
    if k > levels {
        return Err(domain(format!("need k <= L, got k = {k}, L = {levels}")));
    }
    let v = rho(levels) * (levels - k) as f64 + a + 1.0;
    Ok((v * v / 2.0).floor() as u64)
}

/// All scale constants at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConstants {
    pub levels: u32,
    pub z: f64,
    pub rho_l: f64,
    pub t_z: f64,
    pub s_l: f64,
    pub eps: f64,
    pub m_eps: f64,
    pub c_star_sphere: f64,
    pub plane_radius: f64,
    pub c_star_plane: f64,
}

pub fn constants(levels: u32, z: f64, eps: f64, plane_radius: f64) -> Result<ScaleConstants> {
    if levels < 2 {
        return Err(domain(format!("need L >= 2, got {levels}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("need eps in (0, 1), got {eps}")));
    }
    Ok(ScaleConstants {
        levels,
        z,
        rho_l: rho(levels),
        t_z: t_z(levels, z),
        s_l: s_l(levels, z),
        eps,
        m_eps: m_eps(eps),
        c_star_sphere: 2.0 * std::f64::consts::SQRT_2,
        plane_radius,
        c_star_plane: std::f64::consts::SQRT_2 * plane_radius,
    })
}

/// Level-dependent lower constraint on `sqrt(2 T_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BarrierCurve {
    /// `rho_L (L - l) - l_L^0.4`, and 0 at `l = L`.
    AlphaLower { levels: u32 },
    /// `rho_L (L - l) + l_L^{1/4}`.
    GammaLower { levels: u32 },
    /// `rho_L (L - l)`.
    Linear { levels: u32 },
    /// Explicit values indexed by level.
    Table(Vec<f64>),
}

impl BarrierCurve {
    pub fn value(&self, l: u32) -> f64 {
        match self {
            Self::AlphaLower { levels } => {
                if l >= *levels {
                    0.0
                } else {
                    rho(*levels) * (levels - l) as f64 - l_wedge(l, *levels).powf(ALPHA_EXPONENT)
                }
            }
            Self::GammaLower { levels } => {
                rho(*levels) * levels.saturating_sub(l) as f64 + l_wedge(l, *levels).powf(GAMMA_EXPONENT)
            }
            Self::Linear { levels } => rho(*levels) * levels.saturating_sub(l) as f64,
            Self::Table(v) => v.get(l as usize).copied().unwrap_or(f64::NEG_INFINITY),
        }
    }

    /// Smallest count with `sqrt(2T) >= value(l)`.
    pub fn min_count(&self, l: u32) -> u64 {
        count_at_least(self.value(l))
    }
}

/// Smallest integer `T` with `sqrt(2T) >= v`.
pub fn count_at_least(v: f64) -> u64 {
    if v <= 0.0 {
        0
    } else {
        let t = (v * v / 2.0).ceil();
        // guard against the square root rounding below v
        let mut t = t as u64;
        while t > 0 && (2.0 * (t - 1) as f64).sqrt() >= v {
            t -= 1;
        }
        while (2.0 * t as f64).sqrt() < v {
            t += 1;
        }
        t
    }
}

/// What must hold at the final level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    /// `T_level = 0`.
    Extinction { level: u32 },
    /// `sqrt(2 T_level) ∈ [v, v + 1)`.
    Window { level: u32, v: f64 },
}

impl Terminal {
    pub fn level(&self) -> u32 {
        match *self {
            Self::Extinction { level } | Self::Window { level, .. } => level,
        }
    }

    /// Inclusive count range accepted at the final level.
    pub fn count_range(&self) -> (u64, u64) {
        match *self {
            Self::Extinction { .. } => (0, 0),
            Self::Window { v, .. } => {
                let lo = count_at_least(v);
                let hi = count_at_least(v + 1.0);
                (lo, hi.saturating_sub(1).max(lo.saturating_sub(1)))
            }
        }
    }

    fn accepts(&self, t: u64) -> bool {
        let (lo, hi) = self.count_range();
        lo <= t && t <= hi
    }
}

/// The four event shapes whose asymptotics are known, with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventShape {
    /// Above `alpha` on `1..k-1`, `sqrt(2 T_k) ∈ I_{alpha(k) + j}`, from `t_z`.
    AlphaWindow { k: u32, z: f64, j: f64 },
    /// Above `gamma` on `1..L-1`, extinct at `L`, from `t_z`.
    GammaExtinction { z: f64 },
    /// Above the line on `k+1..L-1`, extinct at `L`, from `m^2/2` at level `k`
    /// with `m = rho_L (L - k) + j`.
    LinearExtinction { k: u32, j: f64 },
    /// Above the line on `k+1..k+kt`, `sqrt(2 T_{k+kt}) ∈ I_{rho_L(L-k-kt)+j}`,
    /// from `v^2/2` at level `k` with `v = rho_L (L - k) + u`.
    LinearWindow { k: u32, kt: u32, u: f64, j: f64 },
}

/// A barrier event for the process started with `start` individuals at
/// generation `start_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierEvent {
    pub levels: u32,
    pub start: u64,
    pub start_level: u32,
    pub curve: BarrierCurve,
    /// Constrained levels `first..=last`; empty when `first > last`.
    pub first: u32,
    pub last: u32,
    pub terminal: Terminal,
    pub shape: Option<EventShape>,
}

fn round_count(x: f64) -> u64 {
    x.round().max(0.0) as u64
}

impl BarrierEvent {
    pub fn new(
        levels: u32,
        start: u64,
        start_level: u32,
        curve: BarrierCurve,
        first: u32,
        last: u32,
        terminal: Terminal,
    ) -> Result<Self> {
        let end = terminal.level();
        if end <= start_level || end > levels {
            return Err(domain(format!("terminal level {end} must lie in ({start_level}, {levels}]")));
        }
        if first <= last && (first <= start_level || last >= end) {
            return Err(domain(format!(
                "constrained levels {first}..={last} must lie strictly between {start_level} and {end}"
            )));
        }
        if let Terminal::Window { v, .. } = terminal {
            if !(v >= 0.0) {
                return Err(domain(format!("window start must be >= 0, got {v}")));
            }
        }
        Ok(Self { levels, start, start_level, curve, first, last, terminal, shape: None })
    }

    fn constrained(&self, l: u32) -> bool {
        self.first <= l && l <= self.last
    }

    /// `{alpha(l) <= sqrt(2T_l), l < k; sqrt(2T_k) ∈ I_{alpha(k)+j}}` from
    /// `t_z` rounded.
    pub fn alpha_window(levels: u32, z: f64, k: u32, j: f64) -> Result<Self> {
        let curve = BarrierCurve::AlphaLower { levels };
        let v = curve.value(k) + j;
        let mut e = Self::new(levels, round_count(t_z(levels, z)), 0, curve, 1, k - 1, Terminal::Window {
            level: k,
            v: v.max(0.0),
        })?;
        e.shape = Some(EventShape::AlphaWindow { k, z, j });
        Ok(e)
    }

    /// `{gamma(l) <= sqrt(2T_l), l = 1..L-1; T_L = 0}` from `t_z` rounded.
    pub fn gamma_extinction(levels: u32, z: f64) -> Result<Self> {
        let curve = BarrierCurve::GammaLower { levels };
        let mut e = Self::new(levels, round_count(t_z(levels, z)), 0, curve, 1, levels - 1, Terminal::Extinction {
            level: levels,
        })?;
        e.shape = Some(EventShape::GammaExtinction { z });
        Ok(e)
    }

    /// `{rho_L(L-l) <= sqrt(2T_l), l = k+1..L-1; T_L = 0}` from `m^2/2`
    /// rounded at level `k`, `m = rho_L (L-k) + j`.
    pub fn linear_extinction(levels: u32, k: u32, j: f64) -> Result<Self> {
        let m = rho(levels) * (levels - k) as f64 + j;
        let curve = BarrierCurve::Linear { levels };
        let mut e = Self::new(levels, round_count(m * m / 2.0), k, curve, k + 1, levels - 1, Terminal::Extinction {
            level: levels,
        })?;
        e.shape = Some(EventShape::LinearExtinction { k, j });
        Ok(e)
    }

    /// Line barrier on `k+1..=k+kt` with terminal window at `k + kt`, from
    /// `v^2/2` rounded at level `k`, `v = rho_L (L-k) + u`.
    pub fn linear_window(levels: u32, k: u32, kt: u32, u: f64, j: f64) -> Result<Self> {
        let r = rho(levels);
        let v = r * (levels - k) as f64 + u;
        let end = k + kt;
        let curve = BarrierCurve::Linear { levels };
        let w = r * (levels - end) as f64 + j;
        // The last constrained level coincides with the window level; the
        // window lies above the line whenever j >= 0.
        let mut e = Self::new(levels, round_count(v * v / 2.0), k, curve, k + 1, end - 1, Terminal::Window {
            level: end,
            v: w.max(0.0),
        })?;
        e.shape = Some(EventShape::LinearWindow { k, kt, u, j });
        Ok(e)
    }
}

/// Exact probability of the event: forward DP on the count law, zeroing
/// mass below the barrier at every constrained level.
pub fn barrier_prob_dp(event: &BarrierEvent) -> Result<f64> {
    barrier_prob_dp_with_budget(event, DEFAULT_STATE_BUDGET)
}

pub fn barrier_prob_dp_with_budget(event: &BarrierEvent, budget: usize) -> Result<f64> {
    let end = event.terminal.level();
    let gens = end - event.start_level;
    let cap = gw::truncation_cap(event.start, gens);
    if cap + 1 > budget {
        return Err(Error::BudgetExceeded { budget: budget as u64 });
    }
    let mut d = CountDist::point(event.start as usize, cap);
    for l in event.start_level + 1..=end {
        d = gw::gw_step_exact(&d)?;
        if event.constrained(l) {
            let m = (event.curve.min_count(l) as usize).min(d.probs.len());
            d.probs[..m].iter_mut().for_each(|p| *p = 0.0);
        }
    }
    let (lo, hi) = event.terminal.count_range();
    let hi = (hi as usize).min(d.cap());
    Ok((lo as usize..=hi).map(|k| d.get(k)).sum())
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: u64,
}

/// Plain Monte Carlo: simulate paths and count those in the event.
pub fn barrier_prob_mc<R: Rng + ?Sized>(event: &BarrierEvent, samples: u64, rng: &mut R) -> McEstimate {
    let end = event.terminal.level();
    let mut hits = 0u64;
    for _ in 0..samples {
        let mut t = event.start;
        let mut ok = true;
        for l in event.start_level + 1..=end {
            t = gw::sample_offspring_total(t, rng);
            if event.constrained(l) && t < event.curve.min_count(l) {
                ok = false;
                break;
            }
        }
        if ok && event.terminal.accepts(t) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    McEstimate { mean: p, se: (p * (1.0 - p) / samples as f64).sqrt(), samples }
}

fn ln_negbin(n: u64, k: u64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + k) - ln_gamma(k + 1.0) - ln_gamma(n) - (n + k) * std::f64::consts::LN_2
}

/// Importance-sampled estimate for rare events.
///
/// Each generation draws geometric offspring with a state-dependent ratio
/// `q`, chosen so that the expected `sqrt(2T)` moves on a straight line
/// towards the terminal target while staying clear of the barrier. The last
/// generation is integrated exactly.
pub fn barrier_prob_is<R: Rng + ?Sized>(event: &BarrierEvent, samples: u64, rng: &mut R) -> McEstimate {
    let end = event.terminal.level();
    let target = match event.terminal {
        Terminal::Extinction { .. } => 0.0,
        Terminal::Window { v, .. } => v + 0.5,
    };
    let (lo, hi) = event.terminal.count_range();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut t = event.start;
        let mut log_w = 0.0;
        let mut alive = true;
        for l in event.start_level + 1..end {
            if t == 0 {
                break;
            }
            let x = (2.0 * t as f64).sqrt();
            let remaining = (end - l + 1) as f64;
            let mut next = x - (x - target) / remaining;
            if event.constrained(l) {
                next = next.max(event.curve.value(l) + 1.0);
            }
            let mean = next.max(0.0).powi(2) / 2.0;
            let ratio = mean / t as f64;
            let q = ratio / (1.0 + ratio);
            let k = gw::sample_negbin(t, q, rng);
            // true / proposal: 2^{-(n+k)} / ((1-q)^n q^k)
            log_w += -((t + k) as f64) * std::f64::consts::LN_2
                - t as f64 * (1.0 - q).ln()
                - if k > 0 { k as f64 * q.ln() } else { 0.0 };
            t = k;
            if event.constrained(l) && t < event.curve.min_count(l) {
                alive = false;
                break;
            }
        }
        let w = if !alive {
            0.0
        } else if t == 0 {
            if lo == 0 { log_w.exp() } else { 0.0 }
        } else {
            let p_last: f64 = (lo..=hi).map(|k| ln_negbin(t, k).exp()).sum();
            let p_last = if event.constrained(end) {
                let m = event.curve.min_count(end);
                (lo.max(m)..=hi).map(|k| ln_negbin(t, k).exp()).sum()
            } else {
                p_last
            };
            log_w.exp() * p_last
        };
        sum += w;
        sum_sq += w * w;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    McEstimate { mean, se: (var / n).sqrt(), samples }
}

/// `L^{l/L} exp(-2l - 2(z - theta + l_L^0.4) - (z + l_L^0.4 - theta)^2 / (4l))`.
pub fn b_bound(l: u32, levels: u32, z: f64, theta: f64) -> Result<f64> {
    if l < 1 || l > levels {
        return Err(domain(format!("need 1 <= l <= L, got l = {l}, L = {levels}")));
    }
    let lf = l as f64;
    let lg = l_wedge(l, levels).powf(ALPHA_EXPONENT);
    let d = z + lg - theta;
    Ok((levels as f64).powf(lf / levels as f64) * (-2.0 * lf - 2.0 * d - d * d / (4.0 * lf)).exp())
}

/// A bound expression evaluated without its unspecified constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBound {
    pub label: String,
    pub value: f64,
    /// Whether the bound holds in both directions up to constants.
    pub two_sided: bool,
}

/// Bound expressions matching the event's shape.
pub fn asymptotic_bounds(event: &BarrierEvent) -> Result<Vec<LabeledBound>> {
    let levels = event.levels as f64;
    let shape = event.shape.ok_or(Error::ShapeMismatch)?;
    let b = match shape {
        EventShape::AlphaWindow { k, z, j } => {
            let kf = k as f64;
            let kg = l_wedge(k, event.levels).powf(ALPHA_EXPONENT);
            LabeledBound {
                label: "alpha_window".into(),
                value: (-2.0 * kf - 2.0 * z - 2.0 * kg + 2.0 * j).exp()
                    * (1.0 + z + kg)
                    * (1.0 + j)
                    * (-(z + kg - j).powi(2) / (4.0 * kf)).exp(),
                two_sided: false,
            }
        }
        EventShape::GammaExtinction { z } => LabeledBound {
            label: "gamma_extinction".into(),
            value: (1.0 + z) * (-2.0 * levels - 2.0 * z).exp() * (-z * z / (4.0 * levels)).exp(),
            two_sided: true,
        },
        EventShape::LinearExtinction { k, j } => {
            let g = levels - k as f64;
            LabeledBound {
                label: "linear_extinction".into(),
                value: (1.0 + j) * (-2.0 * g - 2.0 * j - j * j / (4.0 * g)).exp(),
                two_sided: false,
            }
        }
        EventShape::LinearWindow { kt, u, j, .. } => {
            let kt = kt as f64;
            LabeledBound {
                label: "linear_window".into(),
                value: (1.0 + u) * (1.0 + j) / kt.powf(1.5)
                    * (-2.0 * kt - 2.0 * (u - j) - (u - j).powi(2) / (4.0 * kt)).exp(),
                two_sided: false,
            }
        }
    };
    Ok(vec![b])
}
