//! Cover-time detection on grid covers.
//!
//! The path is generated by walk-on-spheres on the sphere itself: from `p`
//! it jumps to a uniform point on the geodesic circle of radius `G` around
//! `p`, where `G` is the distance to the nearest grid point still waiting to
//! be detected, minus its detection radius. That exit position is exact in
//! law, and no grid point can be approached more closely during the jump
//! than at its end. The elapsed time of each jump is drawn from the disk
//! exit-time law rescaled to the cap's exact mean.
//!
//! A grid point counts as detected at radius `r` once the walker comes
//! within `r + eta`, so the detection time lies between the true hitting
//! times of radii `r + eta` and `r`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{cover_with_radius, ActiveSet, CubeIndex, COVER_PROBES};
use crate::bm_sim::cap_exit_time;
use crate::error::{domain, Error, Result};
use crate::geometry::{v3, SpherePoint};

/// Grid density and shell, relative to `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    /// Grid covering radius `delta = grid_factor * eps`.
    pub grid_factor: f64,
    /// Detection shell `eta = shell_factor * delta`.
    pub shell_factor: f64,
    /// Largest jump radius.
    pub max_jump: f64,
    /// Jump cap per trial.
    pub budget: u64,
    /// Random probes used to certify each grid's covering radius.
    pub probes: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { grid_factor: 0.1, shell_factor: 0.1, max_jump: 1.0, budget: 2_000_000_000, probes: COVER_PROBES }
    }
}

/// A prepared grid for one `eps`, shareable across trials.
#[derive(Debug)]
pub struct CoverGrid {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    /// Detection radius for the early bound, `eps + delta`.
    pub r_lower: f64,
    /// Detection radius for the late bound, `eps - delta - eta`.
    pub r_upper: f64,
    pub index: CubeIndex,
}

impl CoverGrid {
    pub fn build(eps: f64, config: &CoverConfig) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(domain(format!("eps must be positive, got {eps}")));
        }
        let delta = config.grid_factor * eps;
        let eta = config.shell_factor * delta;
        if !(delta > 0.0 && eta > 0.0 && delta + eta < eps) {
            return Err(domain("need 0 < delta, 0 < eta and delta + eta < eps"));
        }
        let units = if eps >= std::f64::consts::PI {
            vec![[0.0, 0.0, -1.0]]
        } else {
            cover_with_radius(delta, &[], config.probes)?.0
        };
        Ok(Self { eps, delta, eta, r_lower: eps + delta, r_upper: eps - delta - eta, index: CubeIndex::new(&units) })
    }
}

/// Detection-time bounds for one `eps`: the true cover time of the path lies
/// in `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverBounds {
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
}

struct Tracked<'a> {
    grid: &'a CoverGrid,
    radius: f64,
    set: ActiveSet,
    done_at: Option<f64>,
    /// Exact gap at `anchor`. The gap is 1-Lipschitz and deactivation only
    /// raises it, so `gap - angle(p, anchor)` stays a lower bound.
    gap: f64,
    anchor: [f64; 3],
    /// Last nearest slot, used to seed the next search.
    hint: Option<usize>,
}

/// Pooled per-trial state for a set of grids.
pub struct CoverRun {
    grids: Vec<Arc<CoverGrid>>,
    config: CoverConfig,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverTrial {
    pub bounds: Vec<CoverBounds>,
    pub jumps: u64,
}

impl CoverRun {
    pub fn new(eps: &[f64], config: CoverConfig) -> Result<Self> {
        let grids = eps
            .iter()
            .map(|&e| CoverGrid::build(e.min(std::f64::consts::PI), &config).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grids, config })
    }

    pub fn from_grids(grids: Vec<Arc<CoverGrid>>, config: CoverConfig) -> Self {
        Self { grids, config }
    }

    pub fn grids(&self) -> &[Arc<CoverGrid>] {
        &self.grids
    }

    /// One path from `start`, tracking every grid until all are covered.
    pub fn run<R: Rng>(&self, start: SpherePoint, rng: &mut R) -> Result<CoverTrial> {
        self.run_traced(start, rng, None)
    }

    /// As [`CoverRun::run`], also recording every visited point with its time.
    pub fn run_traced<R: Rng>(
        &self,
        start: SpherePoint,
        rng: &mut R,
        mut trace: Option<&mut Vec<([f64; 3], f64)>>,
    ) -> Result<CoverTrial> {
        let p0 = start.unit();
        let mut tracked: Vec<Tracked> = Vec::new();
        for g in &self.grids {
            if g.eps >= std::f64::consts::PI {
                continue;
            }
            for radius in [g.r_lower, g.r_upper] {
                tracked.push(Tracked { grid: g, radius, set: ActiveSet::full(&g.index), done_at: None, gap: f64::NEG_INFINITY, anchor: p0, hint: None });
            }
        }
        let mut p = p0;
        let mut clock = 0.0;
        let mut jumps = 0u64;
        let mut bound = vec![0.0; tracked.len()];
        loop {
            if let Some(tr) = trace.as_deref_mut() {
                tr.push((p, clock));
            }
            // Sets that may be within their shell are refreshed first; then exact
            // gaps are refreshed in increasing order of their lower bounds until
            // the smallest bound is exact.
            for (b, t) in bound.iter_mut().zip(&tracked) {
                *b = if t.done_at.is_some() { f64::INFINITY } else { t.gap - v3::angle(p, t.anchor) };
            }
            let gap = loop {
                let k = match bound.iter().zip(&tracked).position(|(&b, t)| b < t.grid.eta) {
                    Some(k) => k,
                    None => bound.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("tracked sets").0,
                };
                let b = bound[k];
                if b == f64::INFINITY {
                    break None;
                }
                if b >= self.config.max_jump {
                    break Some(self.config.max_jump);
                }
                let t = &mut tracked[k];
                if t.anchor == p && b >= t.grid.eta {
                    break Some(b);
                }
                let eta = t.grid.eta;
                let mut g = nearest_gap(t, p);
                if g < eta {
                    t.set.deactivate_within(&t.grid.index, p, t.radius + eta);
                    if t.set.remaining() == 0 {
                        t.done_at = Some(clock);
                        bound[k] = f64::INFINITY;
                        continue;
                    }
                    g = nearest_gap(t, p);
                }
                t.gap = g;
                t.anchor = p;
                bound[k] = g;
            };
            let Some(gap) = gap else { break };
            if jumps >= self.config.budget {
                return Err(Error::BudgetExceeded { budget: self.config.budget });
            }
            jumps += 1;
            let here = SpherePoint::from_direction(p);
            let next = here.offset(gap, rng.random::<f64>() * std::f64::consts::TAU);
            clock += cap_exit_time(gap, rng);
            p = next.unit();
        }
        let mut bounds = Vec::new();
        let mut it = tracked.iter();
        for g in &self.grids {
            if g.eps >= std::f64::consts::PI {
                bounds.push(CoverBounds { eps: g.eps, lower: 0.0, upper: 0.0 });
                continue;
            }
            let lo = it.next().and_then(|t| t.done_at).unwrap_or(f64::NAN);
            let hi = it.next().and_then(|t| t.done_at).unwrap_or(f64::NAN);
            bounds.push(CoverBounds { eps: g.eps, lower: lo, upper: hi });
        }
        Ok(CoverTrial { bounds, jumps })
    }
}

fn nearest_gap(t: &mut Tracked, p: [f64; 3]) -> f64 {
    match t.set.nearest_from(&t.grid.index, p, t.hint) {
        Some((slot, d)) => {
            t.hint = Some(slot);
            d - t.radius
        }
        None => f64::INFINITY,
    }
}

/// `(C_lower, C_upper)` for a single `eps` on a fresh path from the south
/// pole.
pub fn cover_time<R: Rng>(eps: f64, config: &CoverConfig, rng: &mut R) -> Result<(f64, f64)> {
    if eps >= std::f64::consts::PI {
        return Ok((0.0, 0.0));
    }
    let run = CoverRun::new(&[eps], *config)?;
    let b = run.run(SpherePoint::SOUTH, rng)?.bounds[0];
    Ok((b.lower, b.upper))
}

/// Angle between two points, for callers holding unit vectors.
pub fn unit_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    v3::angle(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quick() -> CoverConfig {
        CoverConfig { probes: 5_000, ..CoverConfig::default() }
    }

    #[test]
    fn whole_sphere_ball_covers_at_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(cover_time(std::f64::consts::PI, &quick(), &mut rng).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sandwich_and_monotonicity() {
        let run = CoverRun::new(&[0.5, 0.3], quick()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let t = run.run(SpherePoint::SOUTH, &mut rng).unwrap();
            let (big, small) = (t.bounds[0], t.bounds[1]);
            assert!(big.lower <= big.upper && small.lower <= small.upper);
            assert!(big.lower > 0.0);
            // smaller eps takes longer on the same path
            assert!(small.lower >= big.lower && small.upper >= big.upper);
        }
    }

    #[test]
    fn finer_grid_narrows_the_sandwich() {
        let coarse = CoverRun::new(&[0.3], quick()).unwrap();
        let fine = CoverRun::new(&[0.3], CoverConfig { grid_factor: 0.05, ..quick() }).unwrap();
        let gap = |run: &CoverRun| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut acc = 0.0;
            for _ in 0..20 {
                let b = run.run(SpherePoint::SOUTH, &mut rng).unwrap().bounds[0];
                acc += (b.upper - b.lower) / b.upper;
            }
            acc
        };
        assert!(gap(&fine) < gap(&coarse));
    }

    #[test]
    fn detection_times_match_brute_force_on_the_same_path() {
        let run = CoverRun::new(&[0.9, 0.6], quick()).unwrap();
        for seed in 0..3 {
            let mut path = Vec::new();
            let fast = run.run_traced(SpherePoint::SOUTH, &mut ChaCha8Rng::seed_from_u64(seed), Some(&mut path)).unwrap();
            for (g, b) in run.grids().iter().zip(&fast.bounds) {
                for (r, want) in [(g.r_lower, b.lower), (g.r_upper, b.upper)] {
                    let got = (0..g.index.len())
                        .map(|s| {
                            let y = g.index.unit(s);
                            path.iter().find(|(p, _)| v3::angle(*p, y) <= r + g.eta).expect("detected").1
                        })
                        .fold(0.0, f64::max);
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let run = CoverRun::new(&[0.3], CoverConfig { budget: 5, ..quick() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(run.run(SpherePoint::SOUTH, &mut rng), Err(Error::BudgetExceeded { .. })));
    }
}
