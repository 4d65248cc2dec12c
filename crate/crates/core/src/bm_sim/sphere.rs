//! Geodesic Euler stepping for Brownian motion on the sphere.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::HitSource;
use crate::error::{domain, Error, Result};
use crate::geometry::{v3, CircleSpec, SpherePoint};

/// Step-size control for [`run_until_hit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    /// Largest time step.
    pub dt_max: f64,
    /// Near a circle the per-axis step deviation is `gap / refine_factor`.
    pub refine_factor: f64,
    /// Detection shell as a fraction of the smallest monitored radius.
    pub shell: f64,
    /// Step cap per call; exceeding it is an error.
    pub budget: u64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { dt_max: 1e-3, refine_factor: 5.0, shell: 1e-3, budget: 1_000_000_000 }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0) {
            return Err(domain("dt_max must be positive"));
        }
        if !(self.refine_factor >= 2.0) {
            return Err(domain("refine_factor must be at least 2"));
        }
        if !(self.shell > 0.0 && self.shell <= 0.1) {
            return Err(domain("shell must lie in (0, 0.1]"));
        }
        Ok(())
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn with_shell(mut self, shell: f64) -> Self {
        self.shell = shell;
        self
    }
}

/// A walker owned by one worker: position, elapsed time and its own stream.
#[derive(Debug, Clone)]
pub struct WalkerState<R> {
    pub position: SpherePoint,
    pub clock: f64,
    pub steps: u64,
    pub rng: R,
}

impl<R: Rng> WalkerState<R> {
    pub fn new(position: SpherePoint, rng: R) -> Self {
        Self { position, clock: 0.0, steps: 0, rng }
    }
}

/// First arrival on one of the monitored circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitEvent {
    pub circle_id: usize,
    pub point: SpherePoint,
    /// Walker clock at the hit.
    pub time: f64,
}

/// Advances the walker by a Gaussian tangent displacement with covariance
/// `dt I_2`, following the geodesic.
pub fn geodesic_step<R: Rng>(state: &mut WalkerState<R>, dt: f64) {
    let u = state.position.unit();
    // An isotropic 3D Gaussian projected on the tangent plane is an isotropic
    // 2D Gaussian there.
    let g: [f64; 3] = [
        state.rng.sample(StandardNormal),
        state.rng.sample(StandardNormal),
        state.rng.sample(StandardNormal),
    ];
    let t = v3::sub(g, v3::scale(u, v3::dot(g, u)));
    let sigma = dt.sqrt();
    let len = v3::norm(t) * sigma;
    if len > 0.0 {
        let dir = v3::scale(t, sigma / len);
        let next = v3::add(v3::scale(u, len.cos()), v3::scale(dir, len.sin()));
        state.position = SpherePoint::from_direction(next);
    }
    state.clock += dt;
    state.steps += 1;
}

/// Point at fraction `t` of the geodesic from `a` to `b` (unit vectors).
fn slerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    let omega = v3::angle(a, b);
    if omega < 1e-12 {
        return v3::normalize(v3::add(v3::scale(a, 1.0 - t), v3::scale(b, t)));
    }
    let s = omega.sin();
    v3::add(v3::scale(a, ((1.0 - t) * omega).sin() / s), v3::scale(b, (t * omega).sin() / s))
}

/// Steps until the walker reaches one of `circles`, landing exactly on it.
///
/// Circles listed in `skip` are ignored, which lets a walker resting on a
/// circle look for the next different one.
pub fn run_until_hit<R: Rng>(
    state: &mut WalkerState<R>,
    circles: &[CircleSpec],
    policy: &StepPolicy,
) -> Result<HitEvent> {
    run_until_hit_skipping(state, circles, None, policy)
}

pub(crate) fn run_until_hit_skipping<R: Rng>(
    state: &mut WalkerState<R>,
    circles: &[CircleSpec],
    skip: Option<usize>,
    policy: &StepPolicy,
) -> Result<HitEvent> {
    let active: Vec<usize> = (0..circles.len()).filter(|&i| Some(i) != skip).collect();
    if active.is_empty() {
        return Err(domain("no circles to monitor"));
    }
    let min_radius = active.iter().map(|&i| circles[i].radius).fold(f64::INFINITY, f64::min);
    let tol = policy.shell * min_radius;

    let mut signed: Vec<f64> = active.iter().map(|&i| circles[i].signed_distance(&state.position)).collect();
    if let Some(k) = signed.iter().position(|s| s.abs() <= tol) {
        let c = &circles[active[k]];
        state.position = c.project(&state.position);
        return Ok(HitEvent { circle_id: active[k], point: state.position, time: state.clock });
    }

    let start_steps = state.steps;
    let mut next = vec![0.0; active.len()];
    loop {
        if state.steps - start_steps >= policy.budget {
            return Err(Error::BudgetExceeded { budget: policy.budget });
        }
        let gap = signed.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
        let dt = policy.dt_max.min((gap / policy.refine_factor).powi(2));
        let before = state.position.unit();
        let clock_before = state.clock;
        geodesic_step(state, dt);
        for (n, &i) in next.iter_mut().zip(&active) {
            *n = circles[i].signed_distance(&state.position);
        }

        // Earliest crossing along the step chord; ties go to the lowest index.
        let mut best: Option<(f64, usize)> = None;
        for k in 0..active.len() {
            let (s0, s1) = (signed[k], next[k]);
            let crossed = s0.signum() != s1.signum() || s1.abs() <= tol;
            if !crossed {
                continue;
            }
            let c = &circles[active[k]];
            let after = state.position.unit();
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let side = s0.signum();
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let s = c.signed_distance(&SpherePoint::from_direction(slerp(before, after, mid)));
                if s.abs() <= tol {
                    hi = mid;
                    break;
                }
                if s.signum() == side {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if best.is_none_or(|(t, _)| hi < t) {
                best = Some((hi, k));
            }
        }
        if let Some((t, k)) = best {
            let c = &circles[active[k]];
            let p = SpherePoint::from_direction(slerp(before, state.position.unit(), t));
            state.position = c.project(&p);
            state.clock = clock_before + t * dt;
            return Ok(HitEvent { circle_id: active[k], point: state.position, time: state.clock });
        }
        std::mem::swap(&mut signed, &mut next);
    }
}

/// One round trip `dB(x, b) -> dB(x, a) -> dB(x, b)` with its two hits.
#[derive(Debug, Clone, Copy)]
pub struct Excursion {
    pub start_time: f64,
    pub inner: HitEvent,
    pub outer: HitEvent,
}

impl Excursion {
    pub fn duration(&self) -> f64 {
        self.outer.time - self.start_time
    }

    pub fn inward_time(&self) -> f64 {
        self.inner.time - self.start_time
    }
}

/// Runs from the walker's position to `dB(x, a)` and then back out to
/// `dB(x, b)`.
pub fn sample_excursion<R: Rng>(
    state: &mut WalkerState<R>,
    x: &SpherePoint,
    a: f64,
    b: f64,
    policy: &StepPolicy,
) -> Result<Excursion> {
    if !(a > 0.0 && a < b && b < std::f64::consts::PI) {
        return Err(domain(format!("excursion radii need 0 < a < b < pi, got {a}, {b}")));
    }
    let inner = [CircleSpec::new(*x, a)?];
    let outer = [CircleSpec::new(*x, b)?];
    let start_time = state.clock;
    let inner_hit = run_until_hit(state, &inner, policy)?;
    let outer_hit = run_until_hit(state, &outer, policy)?;
    Ok(Excursion { start_time, inner: inner_hit, outer: outer_hit })
}

/// Spherical hit source over a fixed circle list.
pub struct SphereHits<'a, R> {
    pub state: WalkerState<R>,
    pub circles: &'a [CircleSpec],
    pub policy: StepPolicy,
}

impl<R: Rng> HitSource for SphereHits<'_, R> {
    fn next_hit(&mut self, exclude: Option<usize>) -> Result<usize> {
        run_until_hit_skipping(&mut self.state, self.circles, exclude, &self.policy).map(|h| h.circle_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{annulus_hit_prob, h, sphere_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn walker(p: SpherePoint, seed: u64) -> WalkerState<ChaCha8Rng> {
        WalkerState::new(p, ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn step_second_moment() {
        let mut w = walker(SpherePoint::from_polar(1.0, 0.5), 11);
        let dt = 1e-6;
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let before = w.position;
            geodesic_step(&mut w, dt);
            acc += sphere_distance(&before, &w.position).powi(2);
        }
        let m = acc / n as f64;
        assert!((m / (2.0 * dt) - 1.0).abs() < 0.02, "E d^2 / 2dt = {}", m / (2.0 * dt));
        let off = (v3::norm(w.position.unit()) - 1.0).abs();
        assert!(off < 1e-10);
        assert!((w.clock - n as f64 * dt).abs() < 1e-9);
    }

    #[test]
    fn tiny_step_barely_moves() {
        let mut w = walker(SpherePoint::SOUTH, 1);
        let before = w.position;
        geodesic_step(&mut w, 1e-24);
        assert!(sphere_distance(&before, &w.position) < 1e-10);
    }

    #[test]
    fn start_on_circle_hits_immediately() {
        let c = CircleSpec::new(SpherePoint::SOUTH, 0.3).unwrap();
        let mut w = walker(SpherePoint::from_polar(0.3, 1.0), 2);
        let hit = run_until_hit(&mut w, &[c], &StepPolicy::default()).unwrap();
        assert_eq!(hit.circle_id, 0);
        assert_eq!(hit.time, 0.0);
    }

    #[test]
    fn hits_land_on_circles_and_clock_adds() {
        let circles = [
            CircleSpec::new(SpherePoint::SOUTH, 0.1).unwrap(),
            CircleSpec::new(SpherePoint::SOUTH, 0.5).unwrap(),
        ];
        let policy = StepPolicy::default();
        let mut w = walker(SpherePoint::from_polar(0.25, 0.0), 3);
        for _ in 0..50 {
            let t0 = w.clock;
            let hit = run_until_hit_skipping(&mut w, &circles, None, &policy).unwrap();
            let d = circles[hit.circle_id].signed_distance(&hit.point).abs();
            assert!(d < 1e-12);
            assert!(hit.time >= t0);
            // move off the circle and go again
            let other = 1 - hit.circle_id;
            let t1 = w.clock;
            let h2 = run_until_hit_skipping(&mut w, &circles, Some(hit.circle_id), &policy).unwrap();
            assert_eq!(h2.circle_id, other);
            assert!(h2.time >= t1);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let c = CircleSpec::new(SpherePoint::SOUTH, 0.01).unwrap();
        let mut w = walker(SpherePoint::from_polar(2.0, 0.0), 4);
        let policy = StepPolicy { budget: 10, ..StepPolicy::default() };
        assert!(matches!(run_until_hit(&mut w, &[c], &policy), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn hit_probability_small_sample() {
        // 4000 walks between h(0.1) and h(1) from h(e^{-1}): formula gives 1 - 1/ln(10).
        let (r1, r2, r3) = (0.1, (-1.0f64).exp(), 1.0);
        let p = annulus_hit_prob(r1, r2, r3).unwrap();
        let circles = [
            CircleSpec::new(SpherePoint::SOUTH, h(r1)).unwrap(),
            CircleSpec::new(SpherePoint::SOUTH, h(r3)).unwrap(),
        ];
        let n = 4000;
        let mut hits = 0;
        for i in 0..n {
            let mut w = walker(SpherePoint::from_polar(h(r2), 0.0), 100 + i);
            if run_until_hit(&mut w, &circles, &StepPolicy::default()).unwrap().circle_id == 0 {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((est - p).abs() < 4.0 * se, "est {est} vs {p}");
    }

    #[test]
    fn excursion_validates_radii() {
        let mut w = walker(SpherePoint::SOUTH, 5);
        assert!(sample_excursion(&mut w, &SpherePoint::SOUTH, 0.5, 0.2, &StepPolicy::default()).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(StepPolicy::default().validate().is_ok());
        assert!(StepPolicy { refine_factor: 1.0, ..Default::default() }.validate().is_err());
        assert!(StepPolicy { shell: 0.5, ..Default::default() }.validate().is_err());
        assert!(StepPolicy { dt_max: 0.0, ..Default::default() }.validate().is_err());
    }
}
