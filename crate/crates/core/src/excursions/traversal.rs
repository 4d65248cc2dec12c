//! Traversal counts between circles, driven by a sequence of circle hits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bm_sim::planar::PlanarWalker;
use crate::bm_sim::sphere::SphereHits;
use crate::bm_sim::{HitSource, StepPolicy, WalkerState};
use crate::error::{domain, Error, Result};
use crate::geometry::{h, project_circle, stereo_project, CircleSpec, RadiusSchedule, Rotation, SpherePoint};

/// Which sampler produces the hit sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum Sampler {
    /// Geodesic stepping on the sphere.
    Sphere(StepPolicy),
    /// Walk-on-spheres in the chart; `shell` is relative to the smallest
    /// circle and `budget` caps jumps per hit.
    Planar { shell: f64, budget: u64 },
}

impl Default for Sampler {
    fn default() -> Self {
        Self::Planar { shell: 1e-3, budget: 100_000_000 }
    }
}

/// Runs `body` against a hit source over `circles`, started at `start`.
///
/// The planar sampler first rotates everything so that `pivot` sits at the
/// south pole, which keeps the circles around it away from the chart's
/// singular point.
pub fn with_hit_source<R: Rng, T>(
    sampler: &Sampler,
    circles: &[CircleSpec],
    start: SpherePoint,
    pivot: &SpherePoint,
    rng: R,
    body: impl FnOnce(&mut dyn HitSource) -> Result<T>,
) -> Result<T> {
    match sampler {
        Sampler::Sphere(policy) => {
            policy.validate()?;
            let mut src = SphereHits { state: WalkerState::new(start, rng), circles, policy: *policy };
            body(&mut src)
        }
        Sampler::Planar { shell, budget } => {
            let rot = Rotation::taking(pivot, &SpherePoint::SOUTH);
            let plane = circles
                .iter()
                .map(|c| project_circle(&CircleSpec::new(rot.apply(&c.center), c.radius)?))
                .collect::<Result<Vec<_>>>()?;
            let w = stereo_project(&rot.apply(&start))?;
            let mut src = PlanarWalker::new(w, &plane, *shell, *budget, rng)?;
            body(&mut src)
        }
    }
}

/// Driving annulus around `x` and counted annulus around `u`, as Euclidean
/// radii mapped through `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversalQuery {
    pub n: u64,
    pub x: SpherePoint,
    pub drive_outer: f64,
    pub drive_inner: f64,
    pub u: SpherePoint,
    pub outer: f64,
    pub inner: f64,
}

impl TraversalQuery {
    pub fn new(n: u64, x: SpherePoint, drive_outer: f64, drive_inner: f64, u: SpherePoint, outer: f64, inner: f64) -> Result<Self> {
        if !(0.0 < inner && inner < outer && outer < drive_inner && drive_inner < drive_outer) {
            return Err(domain(format!(
                "need 0 < r < R < r~ < R~, got r = {inner}, R = {outer}, r~ = {drive_inner}, R~ = {drive_outer}"
            )));
        }
        Ok(Self { n, x, drive_outer, drive_inner, u, outer, inner })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    DriveOut,
    DriveIn,
    Out(usize),
    In(usize),
}

/// Circle list with coincident circles merged, and the roles each plays.
struct Circles {
    specs: Vec<CircleSpec>,
    roles: Vec<Vec<Role>>,
}

impl Circles {
    fn new() -> Self {
        Self { specs: Vec::new(), roles: Vec::new() }
    }

    fn add(&mut self, c: CircleSpec, role: Role) -> usize {
        let same = |a: &CircleSpec| {
            (a.radius - c.radius).abs() < 1e-12 && crate::geometry::sphere_distance(&a.center, &c.center) < 1e-12
        };
        if let Some(i) = self.specs.iter().position(same) {
            self.roles[i].push(role);
            return i;
        }
        self.specs.push(c);
        self.roles.push(vec![role]);
        self.specs.len() - 1
    }
}

/// Counts traversals for several counted annuli along one path driven by
/// `n` excursions `dB(x, h(r~)) -> dB(x, h(R~))`. The path starts on
/// `dB(x, h(R~))`.
pub fn count_traversals_many<R: Rng>(
    n: u64,
    x: SpherePoint,
    drive_outer: f64,
    drive_inner: f64,
    counted: &[(SpherePoint, f64, f64)],
    sampler: &Sampler,
    rng: R,
) -> Result<Vec<u64>> {
    if !(0.0 < drive_inner && drive_inner < drive_outer) {
        return Err(domain("need 0 < r~ < R~"));
    }
    for (_, outer, inner) in counted {
        if !(0.0 < *inner && inner < outer) {
            return Err(domain("need 0 < r < R for every counted annulus"));
        }
    }
    let mut counts = vec![0u64; counted.len()];
    if n == 0 {
        return Ok(counts);
    }
    let mut circles = Circles::new();
    let start_id = circles.add(CircleSpec::new(x, h(drive_outer))?, Role::DriveOut);
    circles.add(CircleSpec::new(x, h(drive_inner))?, Role::DriveIn);
    for (q, (u, outer, inner)) in counted.iter().enumerate() {
        circles.add(CircleSpec::new(*u, h(*outer))?, Role::Out(q));
        circles.add(CircleSpec::new(*u, h(*inner))?, Role::In(q));
    }
    let start = x.offset(h(drive_outer), 0.0);
    let Circles { specs, roles } = circles;
    with_hit_source(sampler, &specs, start, &x, rng, |src| {
        let mut armed = vec![false; counted.len()];
        let mut drive_armed = false;
        let mut done = 0u64;
        let mut current = start_id;
        let mut first = true;
        loop {
            for role in &roles[current] {
                match *role {
                    Role::Out(q) => armed[q] = true,
                    Role::In(q) => {
                        if armed[q] {
                            counts[q] += 1;
                        }
                        armed[q] = false;
                    }
                    Role::DriveIn => drive_armed = true,
                    Role::DriveOut => {
                        if drive_armed && !first {
                            done += 1;
                        }
                        drive_armed = false;
                    }
                }
            }
            first = false;
            if done == n {
                return Ok(std::mem::take(&mut counts));
            }
            current = src.next_hit(Some(current))?;
        }
    })
}

/// Number of traversals `dB(u, h(R)) -> dB(u, h(r))` during the first `n`
/// excursions `dB(x, h(r~)) -> dB(x, h(R~))`.
pub fn count_traversals<R: Rng>(query: &TraversalQuery, sampler: &Sampler, rng: R) -> Result<u64> {
    let v = count_traversals_many(
        query.n,
        query.x,
        query.drive_outer,
        query.drive_inner,
        &[(query.u, query.outer, query.inner)],
        sampler,
        rng,
    )?;
    Ok(v[0])
}

/// Concentric traversal counts along one path, with the visited levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalRecord {
    /// `counts[0]` is the number of completed `1 -> 0` moves, which equals
    /// `n`; `counts[l]` for `l >= 1` counts `(l-1) -> l` moves, so
    /// `counts[1] = n` as well.
    pub counts: Vec<u64>,
    /// Levels of successive distinct circle hits, starting at 0.
    pub levels: Vec<u8>,
}

impl TraversalRecord {
    /// `T_l` for `l >= 1`.
    pub fn t(&self, l: usize) -> u64 {
        self.counts[l]
    }
}

/// `T_l^{x,n}` for `l = 1..=L` on circles `dB(x, h_l)` of `schedule`, along
/// one path started on `dB(x, h_0)`.
pub fn traversal_process<R: Rng>(
    x: SpherePoint,
    schedule: &RadiusSchedule,
    n: u64,
    sampler: &Sampler,
    rng: R,
) -> Result<TraversalRecord> {
    let levels = schedule.levels;
    if levels > u8::MAX as usize {
        return Err(domain("at most 255 levels"));
    }
    let mut counts = vec![0u64; levels + 1];
    let mut seq = vec![0u8];
    if n == 0 {
        return Ok(TraversalRecord { counts, levels: seq });
    }
    let circles = schedule.h.iter().map(|&r| CircleSpec::new(x, r)).collect::<Result<Vec<_>>>()?;
    let start = x.offset(schedule.h[0], 0.0);
    with_hit_source(sampler, &circles, start, &x, rng, |src| {
        let mut cur = 0usize;
        loop {
            let next = src.next_hit(Some(cur))?;
            if next.abs_diff(cur) != 1 {
                return Err(Error::InvariantViolation(format!("level jump {cur} -> {next}")));
            }
            seq.push(next as u8);
            if next == cur + 1 {
                counts[next] += 1;
            } else if next == 0 {
                counts[0] += 1;
                if counts[0] == n {
                    return Ok(TraversalRecord { counts: std::mem::take(&mut counts), levels: std::mem::take(&mut seq) });
                }
            }
            cur = next;
        }
    })
}

/// `T_l^{k,m}` for `l = k..=L` recomputed from a stored level sequence: the
/// `(l-1) -> l` moves within the first `m` excursions from level `k` to
/// level `k - 1`.
pub fn counts_from_level(levels: &[u8], k: usize, m: u64, depth: usize) -> Result<Vec<u64>> {
    if k == 0 || k > depth {
        return Err(domain(format!("need 1 <= k <= L, got k = {k}")));
    }
    let mut out = vec![0u64; depth + 1 - k];
    if m == 0 {
        return Ok(out);
    }
    let mut done = 0u64;
    for w in levels.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if b == a + 1 && b >= k {
            out[b - k] += 1;
        } else if a == k && b == k - 1 {
            done += 1;
            if done == m {
                return Ok(out);
            }
        }
    }
    Err(domain(format!("only {done} of {m} excursions in the sequence")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gw::{extinction_prob, gw_step_exact, CountDist};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planar() -> Sampler {
        Sampler::Planar { shell: 1e-4, budget: 10_000_000 }
    }

    #[test]
    fn zero_excursions() {
        let s = RadiusSchedule::new(0.5, 3).unwrap();
        let x = SpherePoint::from_polar(1.0, 0.3);
        let rec = traversal_process(x, &s, 0, &planar(), ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(rec.counts, vec![0; 4]);
        let q = TraversalQuery::new(0, x, 0.5, 0.3, x, 0.2, 0.1).unwrap();
        assert_eq!(count_traversals(&q, &planar(), ChaCha8Rng::seed_from_u64(0)).unwrap(), 0);
        assert!(TraversalQuery::new(1, x, 0.5, 0.3, x, 0.1, 0.2).is_err());
    }

    #[test]
    fn process_basics_and_compatibility() {
        let s = RadiusSchedule::new(0.5, 4).unwrap();
        let x = SpherePoint::from_polar(2.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let rec = traversal_process(x, &s, 6, &planar(), &mut rng).unwrap();
            assert_eq!(rec.counts[0], 6);
            assert_eq!(rec.counts[1], 6);
            for k in 1..=4 {
                let sub = counts_from_level(&rec.levels, k, rec.counts[k], 4).unwrap();
                assert_eq!(sub, rec.counts[k..].to_vec(), "k = {k}");
            }
        }
    }

    #[test]
    fn second_generation_is_geometric_branching() {
        let s = RadiusSchedule::new(0.5, 2).unwrap();
        let x = SpherePoint::from_polar(1.2, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 4000;
        let n = 3u64;
        let cap = 80;
        let mut hist = vec![0.0; cap + 1];
        let mut extinct = 0;
        for _ in 0..trials {
            let rec = traversal_process(x, &s, n, &planar(), &mut rng).unwrap();
            hist[(rec.t(2) as usize).min(cap)] += 1.0 / trials as f64;
            extinct += (rec.t(2) == 0) as usize;
        }
        let exact = gw_step_exact(&CountDist::point(n as usize, cap)).unwrap();
        let tv: f64 = hist.iter().zip(&exact.probs).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.04, "tv {tv}");
        let p = extinction_prob(n, 1);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((extinct as f64 / trials as f64 - p).abs() < 3.5 * se);
    }

    #[test]
    fn concentric_count_matches_process() {
        // With x = u and unit log gaps the query count is T_2 of the process,
        // driven by the same seed.
        let s = RadiusSchedule::new(0.5, 2).unwrap();
        let x = SpherePoint::from_polar(0.4, 2.0);
        for seed in 0..20 {
            let rec = traversal_process(x, &s, 4, &planar(), ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let many = count_traversals_many(
                4,
                x,
                s.r[0],
                s.r[1],
                &[(x, s.r[0], s.r[1]), (x, s.r[1], s.r[2])],
                &planar(),
                ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            assert_eq!(many, vec![rec.t(1), rec.t(2)]);
        }
    }

    #[test]
    fn larger_inner_radius_never_counts_fewer() {
        let x = SpherePoint::from_polar(1.0, 1.0);
        let u = x.offset(0.1, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let c = count_traversals_many(5, x, 1.0, 0.6, &[(u, 0.3, 0.05), (u, 0.3, 0.15)], &planar(), &mut rng).unwrap();
            assert!(c[1] >= c[0], "{c:?}");
        }
    }

    #[test]
    fn sphere_sampler_agrees_on_means() {
        let s = RadiusSchedule::new(1.0, 2).unwrap();
        let x = SpherePoint::from_polar(1.5, 0.0);
        let sampler = Sampler::Sphere(StepPolicy::default().with_dt_max(1e-3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 300;
        let mean: f64 =
            (0..trials).map(|_| traversal_process(x, &s, 2, &sampler, &mut rng).unwrap().t(2) as f64).sum::<f64>()
                / trials as f64;
        // T_2 given T_1 = 2 has mean 2 and variance 4.
        assert!((mean - 2.0).abs() < 4.0 * (4.0f64 / trials as f64).sqrt(), "{mean}");
    }
}
