//! Walk-on-spheres in the stereographic chart.
//!
//! Only the order in which circles are hit is produced. Far from every circle
//! the walker is returned to a large enclosing circle by sampling the exterior
//! harmonic measure, which keeps step counts bounded despite planar
//! recurrence being slow.

use rand::Rng;

use super::disk::sample_disk_exit;
use super::HitSource;
use crate::error::{domain, Error, Result};
use crate::geometry::{PlaneCircle, PlanePoint};

/// A hit of a chart circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarHit {
    pub circle_id: usize,
    pub point: PlanePoint,
}

/// A walk-on-spheres walker over a fixed circle list.
#[derive(Debug, Clone)]
pub struct PlanarWalker<'a, R> {
    pub position: [f64; 2],
    pub circles: &'a [PlaneCircle],
    pub rng: R,
    /// Absolute detection shell.
    tol: f64,
    far_radius: f64,
    pub budget: u64,
    pub steps: u64,
}

impl<'a, R: Rng> PlanarWalker<'a, R> {
    /// `shell` is relative to the smallest circle radius.
    pub fn new(start: PlanePoint, circles: &'a [PlaneCircle], shell: f64, budget: u64, rng: R) -> Result<Self> {
        if circles.is_empty() {
            return Err(domain("no circles to monitor"));
        }
        let min_r = circles.iter().map(|c| c.radius).fold(f64::INFINITY, f64::min);
        let extent = circles
            .iter()
            .map(|c| c.center[0].hypot(c.center[1]) + c.radius)
            .fold(0.0, f64::max);
        Ok(Self {
            position: start.w,
            circles,
            rng,
            tol: shell * min_r,
            far_radius: 2.0 * extent,
            budget,
            steps: 0,
        })
    }

    /// Walks until a circle other than `exclude` is within the shell, then
    /// snaps onto it.
    pub fn walk_to_hit(&mut self, exclude: Option<usize>) -> Result<PlanarHit> {
        let start_steps = self.steps;
        loop {
            let mut best = (f64::INFINITY, usize::MAX);
            for (i, c) in self.circles.iter().enumerate() {
                if Some(i) == exclude {
                    continue;
                }
                let d = c.signed_distance(self.position).abs();
                if d < best.0 {
                    best = (d, i);
                }
            }
            let (gap, id) = best;
            if id == usize::MAX {
                return Err(domain("no circles to monitor"));
            }
            if gap <= self.tol {
                let c = &self.circles[id];
                let (dx, dy) = (self.position[0] - c.center[0], self.position[1] - c.center[1]);
                let n = dx.hypot(dy);
                self.position = if n > 0.0 {
                    [c.center[0] + c.radius * dx / n, c.center[1] + c.radius * dy / n]
                } else {
                    [c.center[0] + c.radius, c.center[1]]
                };
                return Ok(PlanarHit { circle_id: id, point: PlanePoint { w: self.position } });
            }
            if self.steps - start_steps >= self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            self.steps += 1;
            let r2 = self.position[0] * self.position[0] + self.position[1] * self.position[1];
            let far2 = self.far_radius * self.far_radius;
            if r2 > far2 {
                // Kelvin inversion turns the exterior hitting law into the
                // interior Poisson kernel at the mirror point.
                let s = far2 / r2;
                let mirror = [self.position[0] * s, self.position[1] * s];
                self.position = sample_disk_exit([0.0, 0.0], self.far_radius, mirror, &mut self.rng);
            } else {
                let theta = self.rng.random::<f64>() * std::f64::consts::TAU;
                self.position[0] += gap * theta.cos();
                self.position[1] += gap * theta.sin();
            }
        }
    }
}

impl<R: Rng> HitSource for PlanarWalker<'_, R> {
    fn next_hit(&mut self, exclude: Option<usize>) -> Result<usize> {
        self.walk_to_hit(exclude).map(|h| h.circle_id)
    }
}

/// The first `hits` hits of distinct consecutive circles, starting from `w`.
pub fn planar_hit_order_walk<R: Rng>(
    w: PlanePoint,
    circles: &[PlaneCircle],
    hits: usize,
    shell: f64,
    budget: u64,
    rng: R,
) -> Result<Vec<PlanarHit>> {
    let mut walker = PlanarWalker::new(w, circles, shell, budget, rng)?;
    let mut out = Vec::with_capacity(hits);
    let mut last = None;
    for _ in 0..hits {
        let hit = walker.walk_to_hit(last)?;
        last = Some(hit.circle_id);
        out.push(hit);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::annulus_hit_prob;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn concentric(radii: &[f64]) -> Vec<PlaneCircle> {
        radii.iter().map(|&r| PlaneCircle { center: [0.0, 0.0], radius: r }).collect()
    }

    #[test]
    fn start_on_circle_is_immediate() {
        let c = concentric(&[1.0]);
        let hits = planar_hit_order_walk(PlanePoint::new(1.0, 0.0), &c, 1, 1e-3, 1000, ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(hits[0].circle_id, 0);
        assert_eq!(hits[0].point.w, [1.0, 0.0]);
    }

    #[test]
    fn annulus_probability() {
        let (r1, r2, r3) = (0.01, 0.2, 1.0);
        let p = annulus_hit_prob(r1, r2, r3).unwrap();
        let c = concentric(&[r1, r3]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let mut inner = 0;
        for _ in 0..n {
            let mut w = PlanarWalker::new(PlanePoint::new(r2, 0.0), &c, 1e-4, 1_000_000, &mut rng).unwrap();
            if w.walk_to_hit(None).unwrap().circle_id == 0 {
                inner += 1;
            }
        }
        let est = inner as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((est - p).abs() < 4.0 * se, "{est} vs {p}");
    }

    #[test]
    fn returns_from_far_away() {
        // Starting far outside, the walker must come back to the unit circle.
        let c = concentric(&[1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut w = PlanarWalker::new(PlanePoint::new(1e6, -3e5), &c, 1e-6, 10_000, &mut rng).unwrap();
            let hit = w.walk_to_hit(None).unwrap();
            assert!((hit.point.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn consecutive_hits_differ() {
        let c = concentric(&[0.1, 0.3, 0.9]);
        let hits = planar_hit_order_walk(PlanePoint::new(0.5, 0.0), &c, 200, 1e-3, 1_000_000, ChaCha8Rng::seed_from_u64(4)).unwrap();
        for pair in hits.windows(2) {
            assert_ne!(pair[0].circle_id, pair[1].circle_id);
            // nested circles are hit in adjacent order
            assert_eq!((pair[0].circle_id as i64 - pair[1].circle_id as i64).abs(), 1);
        }
    }
}
