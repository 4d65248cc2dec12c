//! One spherical path watched from many centres at once.
//!
//! For every centre `x` the tracker follows the excursions
//! `dB(x, h1) -> dB(x, h0)` with their completion times, and optionally the
//! first entry into a small ball `B(x, hL)` and the traversals
//! `dB(x, h_{L-1}) -> dB(x, h_L)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bm_sim::{geodesic_step, StepPolicy, WalkerState};
use crate::error::{domain, Error, Result};
use crate::geometry::{v3, RadiusSchedule, SpherePoint};

/// Radii watched around every centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WatchRadii {
    pub outer: f64,
    pub inner: f64,
    /// `(h_{L-1}, h_L)` when the small-ball statistics are wanted.
    pub deep: Option<(f64, f64)>,
}

impl WatchRadii {
    pub fn from_schedule(schedule: &RadiusSchedule, with_deep: bool) -> Self {
        let l = schedule.levels;
        Self {
            outer: schedule.h[0],
            inner: schedule.h[1],
            deep: with_deep.then(|| (schedule.h[l - 1], schedule.h[l])),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.inner && self.inner < self.outer && self.outer < std::f64::consts::PI;
        let deep_ok = self.deep.is_none_or(|(a, b)| 0.0 < b && b < a && a <= self.inner);
        if ok && deep_ok {
            Ok(())
        } else {
            Err(domain(format!("watch radii out of order: {self:?}")))
        }
    }
}

/// When a tracked run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    /// Every centre has completed this many excursions.
    Completions(u64),
    /// Every centre's small ball has been entered.
    AllEntered,
}

/// Step control for tracked runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPolicy {
    pub step: StepPolicy,
    /// Shrink steps near watched circles; otherwise every step is `dt_max`.
    pub adaptive: bool,
    /// Between steps, cross a nearby circle with the Brownian-bridge
    /// probability `exp(-2ab/dt)`, where `a`, `b` are the endpoint distances.
    #[serde(default)]
    pub bridge: bool,
}

impl Default for TrackPolicy {
    fn default() -> Self {
        Self { step: StepPolicy::default(), adaptive: true, bridge: false }
    }
}

/// What one centre saw.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CenterLog {
    /// Clock at each completed excursion, up to the stop target.
    pub completion_times: Vec<f64>,
    /// Total completed excursions when the run stopped.
    pub completed: u64,
    /// `t*_{x,L}`: one more than the completed count at the first entry of
    /// the small ball, or 0 if the path started inside it.
    pub t_star: Option<u64>,
    /// Completed count at each `h_{L-1} -> h_L` traversal.
    pub deep_traversals: Vec<u64>,
}

impl CenterLog {
    /// `T_L^{x,t}`: deep traversals before the `t`-th completion.
    pub fn deep_count_before(&self, t: u64) -> usize {
        self.deep_traversals.iter().filter(|&&c| c < t).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    unit: [f64; 3],
    inside: bool,
    entered: bool,
    armed: bool,
    done: bool,
    dot: f64,
}

/// Result of a tracked run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedRun {
    pub logs: Vec<CenterLog>,
    pub clock: f64,
    pub steps: u64,
}

/// Runs one path from `start` until `stop` holds for every centre.
pub fn track_centers<R: Rng>(
    centers: &[SpherePoint],
    radii: WatchRadii,
    stop: StopRule,
    start: SpherePoint,
    policy: &TrackPolicy,
    rng: R,
) -> Result<TrackedRun> {
    radii.validate()?;
    policy.step.validate()?;
    if stop == StopRule::AllEntered && radii.deep.is_none() {
        return Err(domain("AllEntered needs deep radii"));
    }
    let target = match stop {
        StopRule::Completions(m) => Some(m),
        StopRule::AllEntered => None,
    };
    let (c_out, c_in) = (radii.outer.cos(), radii.inner.cos());
    let (c_mid, c_deep) = radii.deep.map_or((f64::NAN, f64::NAN), |(a, b)| (a.cos(), b.cos()));
    let p0 = start.unit();
    let mut logs = vec![CenterLog::default(); centers.len()];
    let mut state: Vec<Center> = centers
        .iter()
        .map(|c| {
            let unit = c.unit();
            let dot = v3::dot(unit, p0);
            Center { unit, inside: dot >= c_in, entered: dot >= c_deep, armed: true, done: false, dot }
        })
        .collect();
    let mut remaining = 0usize;
    for (s, log) in state.iter_mut().zip(logs.iter_mut()) {
        if s.entered {
            log.t_star = Some(0);
        }
        s.done = match stop {
            StopRule::Completions(m) => m == 0,
            StopRule::AllEntered => s.entered,
        };
        remaining += usize::from(!s.done);
    }
    let mut walker = WalkerState::new(start, rng);
    let sp = policy.step;
    // Steps never shrink below the detection shell, so a walker close to a
    // circle still crosses it in finite time.
    let smallest = radii.deep.map_or(radii.inner, |(_, b)| b);
    let dt_min = (sp.shell * smallest).powi(2).min(sp.dt_max);
    while remaining > 0 {
        if walker.steps >= sp.budget {
            return Err(Error::BudgetExceeded { budget: sp.budget });
        }
        let dt = if policy.adaptive {
            let mut gap = f64::INFINITY;
            for s in &state {
                let d = s.dot.clamp(-1.0, 1.0).acos();
                let mut g = if s.inside { (d - radii.outer).abs() } else { (d - radii.inner).abs() };
                if let Some((mid, deep)) = radii.deep {
                    if !s.entered {
                        g = g.min((d - deep).abs());
                    }
                    g = g.min((d - mid).abs());
                }
                gap = gap.min(g);
            }
            sp.dt_max.min((gap / sp.refine_factor).powi(2)).max(dt_min)
        } else {
            sp.dt_max
        };
        let t_old = walker.clock;
        geodesic_step(&mut walker, dt);
        let p = walker.position.unit();
        let tol = 4.5 * dt.sqrt();
        let mut bridge = |old: f64, new: f64, level: f64, r: f64| -> Option<f64> {
            // |cos x - cos y| <= |x - y|, so both distances exceed tol here
            // and the crossing probability is below e^-40.
            if !policy.bridge || ((old - level).abs() >= tol && (new - level).abs() >= tol) {
                return None;
            }
            let a = (old.clamp(-1.0, 1.0).acos() - r).abs();
            let b = (new.clamp(-1.0, 1.0).acos() - r).abs();
            (walker.rng.random::<f64>() < (-2.0 * a * b / dt).exp()).then(|| a / (a + b).max(f64::MIN_POSITIVE))
        };
        for (s, log) in state.iter_mut().zip(logs.iter_mut()) {
            let old = s.dot;
            let c = v3::dot(s.unit, p);
            s.dot = c;
            if !s.inside && (c >= c_in || bridge(old, c, c_in, radii.inner).is_some()) {
                s.inside = true;
            } else if s.inside {
                let frac = if c <= c_out {
                    Some(if old > c { ((old - c_out) / (old - c)).clamp(0.0, 1.0) } else { 1.0 })
                } else {
                    bridge(old, c, c_out, radii.outer)
                };
                if let Some(frac) = frac {
                    s.inside = false;
                    log.completed += 1;
                    if target.is_none_or(|m| log.completed <= m) {
                        log.completion_times.push(t_old + frac * dt);
                    }
                }
            }
            if radii.deep.is_some() {
                if c <= c_mid || (!s.armed && bridge(old, c, c_mid, radii.deep.map_or(0.0, |d| d.0)).is_some()) {
                    s.armed = true;
                }
                if c >= c_deep || ((!s.entered || s.armed) && bridge(old, c, c_deep, radii.deep.map_or(0.0, |d| d.1)).is_some()) {
                    if !s.entered {
                        s.entered = true;
                        log.t_star = Some(log.completed + 1);
                    }
                    if s.armed {
                        log.deep_traversals.push(log.completed);
                        s.armed = false;
                    }
                }
            }
            if !s.done {
                let finished = match stop {
                    StopRule::Completions(m) => log.completed >= m,
                    StopRule::AllEntered => s.entered,
                };
                if finished {
                    s.done = true;
                    remaining -= 1;
                }
            }
        }
    }
    Ok(TrackedRun { logs, clock: walker.clock, steps: walker.steps })
}

/// `tau_x(m)`: clock at the `m`-th completed `h1 -> h0` excursion around `x`,
/// from a start on `dB(x, h0)`.
pub fn tau_x<R: Rng>(m: u64, x: SpherePoint, schedule: &RadiusSchedule, policy: &TrackPolicy, rng: R) -> Result<f64> {
    tau_x_radii(m, x, schedule.h[0], schedule.h[1], policy, rng)
}

/// [`tau_x`] for explicit radii `h0 > h1`.
pub fn tau_x_radii<R: Rng>(m: u64, x: SpherePoint, h0: f64, h1: f64, policy: &TrackPolicy, rng: R) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    let radii = WatchRadii { outer: h0, inner: h1, deep: None };
    let run = track_centers(&[x], radii, StopRule::Completions(m), x.offset(h0, 0.0), policy, rng)?;
    Ok(run.logs[0].completion_times[m as usize - 1])
}

/// Per-point `t*_{x,L}` and their maximum `t*_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCover {
    pub per_point: Vec<u64>,
    pub t_star: u64,
    pub run: TrackedRun,
}

/// Runs one path until every grid point's ball `B(x, h_L)` has been entered.
pub fn local_excursion_cover<R: Rng>(
    schedule: &RadiusSchedule,
    grid: &[SpherePoint],
    start: SpherePoint,
    policy: &TrackPolicy,
    rng: R,
) -> Result<LocalCover> {
    if schedule.levels < 2 {
        return Err(domain("need L >= 2"));
    }
    let radii = WatchRadii::from_schedule(schedule, true);
    let run = track_centers(grid, radii, StopRule::AllEntered, start, policy, rng)?;
    let per_point: Vec<u64> = run.logs.iter().map(|l| l.t_star.unwrap_or(0)).collect();
    let t_star = per_point.iter().copied().max().unwrap_or(0);
    Ok(LocalCover { per_point, t_star, run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{h, kappa};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_cases() {
        let s = RadiusSchedule::new(1.0, 3).unwrap();
        let x = SpherePoint::from_polar(1.0, 1.0);
        assert_eq!(tau_x(0, x, &s, &TrackPolicy::default(), ChaCha8Rng::seed_from_u64(0)).unwrap(), 0.0);
        let lc = local_excursion_cover(&s, &[x], x, &TrackPolicy::default(), ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(lc.per_point, vec![0]);
        assert_eq!(lc.t_star, 0);
    }

    #[test]
    fn commute_mean_is_kappa() {
        let s = RadiusSchedule::new(1.0, 1).unwrap();
        let x = SpherePoint::from_polar(0.3, 0.0);
        let k = kappa(s.h[1], s.h[0]).unwrap();
        assert!((k - 4.0).abs() < 1e-12);
        let policy = TrackPolicy { step: StepPolicy::default().with_dt_max(2e-3), adaptive: true, bridge: false };
        let m = 400;
        let t = tau_x(m, x, &s, &policy, ChaCha8Rng::seed_from_u64(1)).unwrap();
        // single-commute coefficient of variation is about 1.3 at r0 = 1
        let se = 1.3 * 4.0 / (m as f64).sqrt();
        assert!((t / m as f64 - 4.0).abs() < 3.5 * se, "{}", t / m as f64);
    }

    #[test]
    fn bridge_removes_the_coarse_step_delay() {
        let (h0, h1) = (h(3.3), h(3.3 / std::f64::consts::E));
        let x = SpherePoint::from_polar(0.7, 0.2);
        let m = 2000;
        let coarse = |bridge| TrackPolicy { step: StepPolicy::default().with_dt_max(4e-3), adaptive: false, bridge };
        let per = |bridge| tau_x_radii(m, x, h0, h1, &coarse(bridge), ChaCha8Rng::seed_from_u64(4)).unwrap() / m as f64;
        let (plain, bridged) = (per(false), per(true));
        // kappa = 4; commute CV is about 0.6 for this annulus
        let se = 0.6 * 4.0 / (m as f64).sqrt();
        assert!((bridged - 4.0).abs() < 3.5 * se, "{bridged}");
        assert!(plain - 4.0 > 3.5 * se, "{plain}");
    }

    #[test]
    fn completion_times_increase_and_budget_applies() {
        let x = SpherePoint::SOUTH;
        let radii = WatchRadii { outer: 1.0, inner: 0.5, deep: None };
        let policy = TrackPolicy::default();
        let run = track_centers(&[x, x.offset(0.3, 0.0)], radii, StopRule::Completions(5), x, &policy, ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        for log in &run.logs {
            assert_eq!(log.completion_times.len(), 5);
            assert!(log.completion_times.windows(2).all(|w| w[0] < w[1]));
            assert!(*log.completion_times.last().unwrap() <= run.clock);
        }
        let tight = TrackPolicy { step: StepPolicy { budget: 10, ..StepPolicy::default() }, adaptive: true, bridge: false };
        let err = track_centers(&[x], radii, StopRule::Completions(5), x, &tight, ChaCha8Rng::seed_from_u64(2));
        assert!(matches!(err, Err(Error::BudgetExceeded { budget: 10 })));
    }

    #[test]
    fn cover_event_identity_holds_pathwise() {
        let s = RadiusSchedule::new(1.0, 2).unwrap();
        let grid: Vec<SpherePoint> = (0..6).map(|i| SpherePoint::from_polar(0.5 + 0.4 * i as f64, 1.3 * i as f64)).collect();
        let policy = TrackPolicy { step: StepPolicy::default().with_dt_max(4e-3), adaptive: true, bridge: false };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let lc = local_excursion_cover(&s, &grid, SpherePoint::NORTH, &policy, &mut rng).unwrap();
            for t in 1..lc.t_star + 3 {
                let some_zero = lc.run.logs.iter().any(|l| l.deep_count_before(t) == 0);
                assert_eq!(lc.t_star > t, some_zero, "t = {t}");
            }
        }
    }
}
