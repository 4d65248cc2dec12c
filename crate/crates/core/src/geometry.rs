//! Closed-form geometry of the unit sphere resting on the plane.
//!
//! The sphere is centered at `(0, 0, 1)` and touches `R^2 x {0}` at the south
//! pole `s = (0, 0, 0)`. Points are stored in ambient coordinates; most
//! computations work with the offset `u = p - (0, 0, 1)`, which is a unit
//! vector. Stereographic projection from the north pole `(0, 0, 2)` gives the
//! isothermal chart used throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const CENTER: [f64; 3] = [0.0, 0.0, 1.0];

pub(crate) mod v3 {
    pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
    pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }
    pub fn norm(a: [f64; 3]) -> f64 {
        dot(a, a).sqrt()
    }
    pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
        [a[0] * s, a[1] * s, a[2] * s]
    }
    pub fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }
    pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }
    pub fn normalize(a: [f64; 3]) -> [f64; 3] {
        scale(a, 1.0 / norm(a))
    }
    /// Angle between two unit vectors, accurate at both ends of `[0, pi]`.
    pub fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
        norm(cross(a, b)).atan2(dot(a, b))
    }
}

/// A point on the unit sphere centered at `(0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    p: [f64; 3],
}

impl SpherePoint {
    /// The tangency point `(0, 0, 0)`.
    pub const SOUTH: SpherePoint = SpherePoint { p: [0.0, 0.0, 0.0] };
    /// `(0, 0, 2)`, where the stereographic chart is singular.
    pub const NORTH: SpherePoint = SpherePoint { p: [0.0, 0.0, 2.0] };

    /// Validates that `p` lies on the sphere to within `1e-12`.
    pub fn new(p: [f64; 3]) -> Result<Self> {
        let r = v3::norm(v3::sub(p, CENTER));
        if !r.is_finite() || (r - 1.0).abs() > 1e-12 {
            return Err(domain(format!("{p:?} is not on the unit sphere (|p - c| = {r})")));
        }
        Ok(Self { p })
    }

    /// Builds a point from a (not necessarily normalized) direction seen from
    /// the sphere's center.
    pub fn from_direction(u: [f64; 3]) -> Self {
        let u = v3::normalize(u);
        Self { p: v3::add(u, CENTER) }
    }

    /// The point at geodesic distance `polar` from the south pole, at
    /// azimuth `azimuth` measured in the tangent plane from the x axis.
    pub fn from_polar(polar: f64, azimuth: f64) -> Self {
        let (s, c) = polar.sin_cos();
        Self::from_direction([s * azimuth.cos(), s * azimuth.sin(), -c])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.p
    }

    /// Unit offset from the sphere's center.
    pub fn unit(&self) -> [f64; 3] {
        v3::sub(self.p, CENTER)
    }

    pub fn is_north(&self) -> bool {
        v3::norm(v3::sub(self.p, Self::NORTH.p)) < 1e-12
    }

    pub fn antipode(&self) -> Self {
        Self::from_direction(v3::scale(self.unit(), -1.0))
    }

    /// The point reached by walking `dist` along the geodesic leaving `self`
    /// in the tangent direction at angle `angle` of [`tangent_frame`].
    pub fn offset(&self, dist: f64, angle: f64) -> Self {
        let u = self.unit();
        let (e1, e2) = tangent_frame(u);
        let t = v3::add(v3::scale(e1, angle.cos()), v3::scale(e2, angle.sin()));
        Self::from_direction(v3::add(v3::scale(u, dist.cos()), v3::scale(t, dist.sin())))
    }

    /// Azimuth of `other` around `self`, in `[0, 2 pi)`, relative to
    /// [`tangent_frame`] at `self`.
    pub fn azimuth_of(&self, other: &SpherePoint) -> f64 {
        let u = self.unit();
        let (e1, e2) = tangent_frame(u);
        let v = other.unit();
        let a = v3::dot(v, e2).atan2(v3::dot(v, e1));
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }
}

/// A deterministic orthonormal frame of the tangent plane at the unit
/// vector `u`. Continuous away from a measure-zero seam.
pub(crate) fn tangent_frame(u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Project the coordinate axis least aligned with u.
    let a = if u[0].abs() <= u[1].abs() && u[0].abs() <= u[2].abs() {
        [1.0, 0.0, 0.0]
    } else if u[1].abs() <= u[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = v3::normalize(v3::sub(a, v3::scale(u, v3::dot(a, u))));
    let e2 = v3::cross(u, e1);
    (e1, e2)
}

/// A point of the tangent plane `R^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub w: [f64; 2],
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { w: [x, y] }
    }

    pub fn norm(&self) -> f64 {
        self.w[0].hypot(self.w[1])
    }
}

/// A geodesic circle `dB_d(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleSpec {
    pub center: SpherePoint,
    pub radius: f64,
}

impl CircleSpec {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < PI) {
            return Err(domain(format!("circle radius {radius} outside (0, pi)")));
        }
        Ok(Self { center, radius })
    }

    /// Geodesic distance to the center minus the radius: negative inside.
    pub fn signed_distance(&self, p: &SpherePoint) -> f64 {
        sphere_distance(&self.center, p) - self.radius
    }

    /// The point of the circle on the meridian through `p`.
    pub fn project(&self, p: &SpherePoint) -> SpherePoint {
        let c = self.center.unit();
        let v = p.unit();
        let t = v3::sub(v, v3::scale(c, v3::dot(v, c)));
        let tn = v3::norm(t);
        let t = if tn < 1e-300 { tangent_frame(c).0 } else { v3::scale(t, 1.0 / tn) };
        SpherePoint::from_direction(v3::add(
            v3::scale(c, self.radius.cos()),
            v3::scale(t, self.radius.sin()),
        ))
    }
}

/// A Euclidean circle in the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneCircle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl PlaneCircle {
    pub fn signed_distance(&self, w: [f64; 2]) -> f64 {
        (w[0] - self.center[0]).hypot(w[1] - self.center[1]) - self.radius
    }
}

/// Geodesic radius of the spherical circle whose chart image around the south
/// pole has Euclidean radius `r`: `h(r) = 2 arctan(r / 2)`.
pub fn h(r: f64) -> f64 {
    2.0 * (r / 2.0).atan()
}

/// Inverse of [`h`] on `[0, pi)`.
pub fn h_inverse(geodesic: f64) -> f64 {
    2.0 * (geodesic / 2.0).tan()
}

/// Stereographic projection from the north pole onto the tangent plane.
pub fn stereo_project(p: &SpherePoint) -> Result<PlanePoint> {
    if p.is_north() {
        return Err(Error::SingularPoint(p.p));
    }
    // 1 - p3/2 written through the unit offset keeps precision near the south pole.
    let u = p.unit();
    let denom = (1.0 - u[2]) / 2.0;
    Ok(PlanePoint::new(p.p[0] / denom, p.p[1] / denom))
}

/// Inverse stereographic projection.
pub fn stereo_inverse(w: &PlanePoint) -> SpherePoint {
    let [x, y] = w.w;
    let s = x * x + y * y;
    let d = s + 4.0;
    SpherePoint {
        p: [4.0 * x / d, 4.0 * y / d, (s - 4.0) / d + 1.0],
    }
}

/// Great-circle distance.
pub fn sphere_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    v3::angle(p.unit(), q.unit())
}

/// The conformal factor `lambda(w) = 1 / (1 + |w|^2 / 4)` of the chart metric
/// `lambda^2 (dx^2 + dy^2)`.
pub fn conformal_factor(w: &PlanePoint) -> f64 {
    let s = w.w[0] * w.w[0] + w.w[1] * w.w[1];
    1.0 / (1.0 + s / 4.0)
}

/// Chart image of a spherical circle. Fails when the closed cap contains the
/// north pole, since its image would be an exterior domain.
pub fn project_circle(c: &CircleSpec) -> Result<PlaneCircle> {
    let cu = c.center.unit();
    let polar = v3::angle(cu, [0.0, 0.0, -1.0]);
    if polar + c.radius >= PI - 1e-12 {
        return Err(domain("circle cap contains the north pole"));
    }
    // The two points of the circle on the meridian through its center are
    // the ends of a diameter of the image circle.
    let azimuth = cu[1].atan2(cu[0]);
    let near = stereo_project(&SpherePoint::from_polar(polar - c.radius, azimuth))?;
    let far = stereo_project(&SpherePoint::from_polar(polar + c.radius, azimuth))?;
    Ok(PlaneCircle {
        center: [(near.w[0] + far.w[0]) / 2.0, (near.w[1] + far.w[1]) / 2.0],
        radius: (far.w[0] - near.w[0]).hypot(far.w[1] - near.w[1]) / 2.0,
    })
}

/// Probability that Brownian motion started on `dB_d(0, h(rho2))` hits
/// `dB_d(0, h(rho1))` before `dB_d(0, h(rho3))`: `log(rho2/rho3) / log(rho1/rho3)`.
pub fn annulus_hit_prob(rho1: f64, rho2: f64, rho3: f64) -> Result<f64> {
    if !(rho1 > 0.0 && rho1 <= rho2 && rho2 <= rho3) || rho1 == rho3 {
        return Err(domain(format!(
            "annulus radii must satisfy 0 < rho1 <= rho2 <= rho3 with rho1 < rho3, got {rho1}, {rho2}, {rho3}"
        )));
    }
    Ok((rho2 / rho3).ln() / (rho1 / rho3).ln())
}

/// Poisson kernel of the geodesic ball `circle`, i.e. the exit density at the
/// boundary point `x` for motion started at `z`, with respect to the uniform
/// probability measure on the circle.
pub fn poisson_kernel_sphere(circle: &CircleSpec, z: &SpherePoint, x: &SpherePoint) -> Result<f64> {
    let r = circle.radius;
    let dz = sphere_distance(&circle.center, z);
    if dz >= r {
        return Err(domain(format!("z at distance {dz} is not interior to radius {r}")));
    }
    let dx = sphere_distance(&circle.center, x);
    if (dx - r).abs() > 1e-9 {
        return Err(domain(format!("x at distance {dx} is not on the circle of radius {r}")));
    }
    let s = |a: f64| (a / 2.0).sin().powi(2);
    Ok((s(r) - s(dz)) / s(sphere_distance(z, x)))
}

fn check_order(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a < b && b < PI) {
        return Err(domain(format!("radii must satisfy 0 < a < b < pi, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Expected commute time `dB(x,a) -> dB(x,b) -> dB(x,a)` for generator
/// `Delta/2`: `4 log(tan(b/2) / tan(a/2))`.
pub fn kappa(a: f64, b: f64) -> Result<f64> {
    check_order(a, b)?;
    Ok(4.0 * ((b / 2.0).tan() / (a / 2.0).tan()).ln())
}

/// Expected time to reach `dB(x, a)` from `dB(x, b)`.
pub fn expected_hit_inner(a: f64, b: f64) -> Result<f64> {
    check_order(a, b)?;
    // 1 - cos t = 2 sin^2(t/2), stable for tiny radii.
    Ok(4.0 * ((b / 2.0).sin() / (a / 2.0).sin()).ln())
}

/// Expected time to reach `dB(x, b)` from `dB(x, a)`.
pub fn expected_hit_outer(a: f64, b: f64) -> Result<f64> {
    check_order(a, b)?;
    // 1 + cos t = 2 cos^2(t/2).
    Ok(4.0 * ((a / 2.0).cos() / (b / 2.0).cos()).ln())
}

/// A rotation of the sphere about its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    /// The smallest rotation taking `from` to `to`.
    pub fn taking(from: &SpherePoint, to: &SpherePoint) -> Self {
        let (a, b) = (from.unit(), to.unit());
        let c = v3::dot(a, b);
        let v = v3::cross(a, b);
        if c < -1.0 + 1e-12 {
            // half turn about any axis orthogonal to a
            let (e, _) = tangent_frame(a);
            let mut m = [[0.0; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = 2.0 * e[i] * e[j] - if i == j { 1.0 } else { 0.0 };
                }
            }
            return Self { m };
        }
        let k = [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let k2: f64 = (0..3).map(|t| k[i][t] * k[t][j]).sum();
                m[i][j] = if i == j { 1.0 } else { 0.0 } + k[i][j] + k2 / (1.0 + c);
            }
        }
        Self { m }
    }

    pub fn apply_unit(&self, u: [f64; 3]) -> [f64; 3] {
        let r = |i: usize| self.m[i][0] * u[0] + self.m[i][1] * u[1] + self.m[i][2] * u[2];
        [r(0), r(1), r(2)]
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        SpherePoint::from_direction(self.apply_unit(p.unit()))
    }
}

/// Geometric radii `r_l = r0 e^{-l}` and their geodesic images `h_l = h(r_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub r0: f64,
    pub levels: usize,
    pub r: Vec<f64>,
    pub h: Vec<f64>,
}

impl RadiusSchedule {
    /// Builds `r_0..=r_L`. The proofs take `r0 <= 1e-6`; desk-scale
    /// simulations use larger `r0`, so any `r0` for which
    /// `0.9 r_l <= h_l <= r_l` holds is accepted.
    pub fn new(r0: f64, levels: usize) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) || levels == 0 {
            return Err(domain(format!("need r0 > 0 and L >= 1, got r0 = {r0}, L = {levels}")));
        }
        let r: Vec<f64> = (0..=levels).map(|l| r0 * (-(l as f64)).exp()).collect();
        let hs: Vec<f64> = r.iter().map(|&x| h(x)).collect();
        for (l, (&rl, &hl)) in r.iter().zip(&hs).enumerate() {
            if !(0.9 * rl <= hl && hl <= rl) {
                return Err(Error::InvariantViolation(format!(
                    "0.9 r_l <= h_l <= r_l fails at l = {l}: r = {rl}, h = {hl}"
                )));
            }
        }
        Ok(Self { r0, levels, r, h: hs })
    }

    /// True in the small-radius regime the asymptotic statements assume.
    pub fn in_proof_regime(&self) -> bool {
        self.r0 <= 1e-6
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const EPS: f64 = 1e-12;

    #[test]
    fn h_values() {
        assert_eq!(h(0.0), 0.0);
        assert!((h(2.0) - PI / 2.0).abs() < EPS);
        for r in [0.1, 1.0, 3.0] {
            assert!(((h(r) / 2.0).tan() - r / 2.0).abs() < EPS);
            assert!(h(r) <= r);
        }
    }

    #[test]
    fn rotations_preserve_distance() {
        let a = SpherePoint::from_polar(0.7, 1.1);
        let b = SpherePoint::from_polar(2.9, -0.4);
        let c = SpherePoint::from_polar(1.3, 2.0);
        for (from, to) in [(a, SpherePoint::SOUTH), (a, a.antipode()), (b, c), (SpherePoint::SOUTH, SpherePoint::NORTH)] {
            let r = Rotation::taking(&from, &to);
            assert!(sphere_distance(&r.apply(&from), &to) < 1e-7);
            assert!((sphere_distance(&r.apply(&b), &r.apply(&c)) - sphere_distance(&b, &c)).abs() < 1e-12);
        }
    }

    #[test]
    fn tan_identity_on_log_grid() {
        // tan is ill-conditioned next to pi/2, so the grid stops at 1e3
        for i in -40..=12 {
            let r = 10f64.powf(i as f64 / 4.0);
            let rel = ((h(r) / 2.0).tan() - r / 2.0).abs() / (r / 2.0);
            assert!(rel < EPS, "r = {r}: rel {rel}");
        }
    }

    #[test]
    fn projection_examples() {
        let w = stereo_project(&SpherePoint::SOUTH).unwrap();
        assert_eq!(w.w, [0.0, 0.0]);
        let w = stereo_project(&SpherePoint::new([1.0, 0.0, 1.0]).unwrap()).unwrap();
        assert!((w.w[0] - 2.0).abs() < EPS && w.w[1].abs() < EPS);
        let w = stereo_project(&SpherePoint::new([0.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!(w.w[0].abs() < EPS && (w.w[1] - 2.0).abs() < EPS);
        assert!(matches!(stereo_project(&SpherePoint::NORTH), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(stereo_inverse(&PlanePoint::new(0.0, 0.0)).coords(), [0.0, 0.0, 0.0]);
        let p = stereo_inverse(&PlanePoint::new(2.0, 0.0)).coords();
        assert!((p[0] - 1.0).abs() < EPS && p[1].abs() < EPS && (p[2] - 1.0).abs() < EPS);
    }

    #[test]
    fn round_trips() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let w = PlanePoint::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            let back = stereo_project(&stereo_inverse(&w)).unwrap();
            worst = worst.max((back.w[0] - w.w[0]).abs()).max((back.w[1] - w.w[1]).abs());
            // and in the other direction, away from the pole
            let p = SpherePoint::from_polar(rng.random_range(0.0..3.0), rng.random_range(0.0..6.3));
            let q = stereo_inverse(&stereo_project(&p).unwrap());
            worst = worst.max(v3::norm(v3::sub(p.coords(), q.coords())));
        }
        assert!(worst < 1e-10, "worst {worst}");
    }

    #[test]
    fn distances() {
        let p = SpherePoint::from_polar(0.7, 0.3);
        assert_eq!(sphere_distance(&p, &p), 0.0);
        assert!((sphere_distance(&SpherePoint::SOUTH, &SpherePoint::NORTH) - PI).abs() < EPS);
        for rho in [0.5, 1.0, 2.0] {
            let q = stereo_inverse(&PlanePoint::new(rho, 0.0));
            let d = sphere_distance(&SpherePoint::SOUTH, &q);
            assert!((d - 2.0 * (rho / 2.0).atan()).abs() < EPS);
        }
    }

    #[test]
    fn conformal_factor_and_arc_length() {
        assert_eq!(conformal_factor(&PlanePoint::new(0.0, 0.0)), 1.0);
        assert!((conformal_factor(&PlanePoint::new(2.0, 0.0)) - 0.5).abs() < EPS);
        // Composite Simpson quadrature of lambda along the radial segment.
        for rho in [0.5, 1.0, 2.0, 5.0] {
            let n = 2000;
            let step = rho / n as f64;
            let f = |x: f64| conformal_factor(&PlanePoint::new(x, 0.0));
            let mut s = f(0.0) + f(rho);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step);
            }
            let len = s * step / 3.0;
            assert!((len - 2.0 * (rho / 2.0).atan()).abs() < 1e-8);
        }
    }

    #[test]
    fn annulus_formula() {
        assert_eq!(annulus_hit_prob(0.1, 0.1, 1.0).unwrap(), 1.0);
        assert_eq!(annulus_hit_prob(0.1, 1.0, 1.0).unwrap(), 0.0);
        let l = 10.0f64;
        let p = annulus_hit_prob((-l).exp(), (-1.0f64).exp(), 1.0).unwrap();
        assert!((p - 1.0 / l).abs() < EPS);
        assert!(annulus_hit_prob(0.2, 0.1, 1.0).is_err());
        assert!(annulus_hit_prob(1.0, 1.0, 1.0).is_err());
        // monotone: decreasing in rho2, increasing in rho1
        let a = annulus_hit_prob(0.1, 0.3, 1.0).unwrap();
        let b = annulus_hit_prob(0.1, 0.4, 1.0).unwrap();
        let c = annulus_hit_prob(0.2, 0.3, 1.0).unwrap();
        assert!(b < a && c > a);
    }

    #[test]
    fn poisson_kernel_center_and_normalization() {
        let circle = CircleSpec::new(SpherePoint::from_polar(0.4, 1.0), 0.8).unwrap();
        let c = circle.center;
        for k in 0..7 {
            let x = c.offset(0.8, k as f64);
            assert!((poisson_kernel_sphere(&circle, &c, &x).unwrap() - 1.0).abs() < 1e-12);
        }
        for frac in [0.1, 0.5, 0.9] {
            let z = c.offset(frac * 0.8, 0.0);
            let n = 4096;
            let avg: f64 = (0..n)
                .map(|i| {
                    let x = c.offset(0.8, 2.0 * PI * (i as f64 + 0.5) / n as f64);
                    poisson_kernel_sphere(&circle, &z, &x).unwrap()
                })
                .sum::<f64>()
                / n as f64;
            assert!((avg - 1.0).abs() < 1e-6, "frac {frac}: {avg}");
        }
        let outside = c.offset(0.9, 0.0);
        assert!(poisson_kernel_sphere(&circle, &outside, &c.offset(0.8, 1.0)).is_err());
        assert!(poisson_kernel_sphere(&circle, &c, &c.offset(0.5, 1.0)).is_err());
    }

    #[test]
    fn kappa_examples() {
        let r0 = 1e-3;
        let k = kappa(h(r0 / std::f64::consts::E), h(r0)).unwrap();
        assert!((k - 4.0).abs() < 1e-12);
        let k = kappa(2.0 * 0.5f64.atan(), PI / 2.0).unwrap();
        assert!((k - 4.0 * 2f64.ln()).abs() < 1e-12);
        assert!((k - 2.772589).abs() < 1e-6);
        assert!(kappa(1.0, 1.0).is_err());
        assert!(kappa(1.0, 0.5).is_err());
    }

    #[test]
    fn hitting_times_sum_to_kappa() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let a: f64 = rng.random_range(1e-6..3.0);
            let b: f64 = rng.random_range(a..PI);
            if b <= a {
                continue;
            }
            let k = kappa(a, b).unwrap();
            let s = expected_hit_inner(a, b).unwrap() + expected_hit_outer(a, b).unwrap();
            assert!((k - s).abs() < 1e-12 * k.max(1.0));
            let c: f64 = rng.random_range(b..PI);
            if c > b {
                let add = kappa(a, b).unwrap() + kappa(b, c).unwrap();
                assert!((kappa(a, c).unwrap() - add).abs() < 1e-12 * add.max(1.0));
            }
        }
        let hi = expected_hit_inner(PI / 4.0, PI / 2.0).unwrap();
        let direct = 2.0 * (1.0 / (1.0 - 2f64.sqrt() / 2.0)).ln();
        assert!((hi - direct).abs() < 1e-12);
        assert!((hi - 2.456).abs() < 1e-3);
        let a = 0.5;
        assert!(expected_hit_inner(a, a + 1e-9).unwrap() < 1e-7);
        assert!(expected_hit_outer(a, a + 1e-9).unwrap() < 1e-7);
    }

    #[test]
    fn schedule() {
        let s = RadiusSchedule::new(1e-6, 12).unwrap();
        assert_eq!(s.r.len(), 13);
        assert_eq!(s.h.len(), 13);
        assert!((s.h[0] - 1e-6).abs() < 1e-18);
        for l in 1..=12 {
            let ratio = s.h[l] / s.h[l - 1];
            let e = (-1.0f64).exp();
            assert!(ratio > e * 0.999 && ratio < e * 1.001);
            assert!(s.h[l] < s.h[l - 1] && s.r[l] < s.r[l - 1]);
            assert!(0.9 * s.r[l] <= s.h[l] && s.h[l] <= s.r[l]);
        }
        assert!(s.in_proof_regime());
        assert!(RadiusSchedule::new(3.0, 2).is_err());
        assert!(RadiusSchedule::new(1e-3, 0).is_err());
    }

    #[test]
    fn projected_circles() {
        // Concentric about the south pole: radius maps back through h.
        let c = CircleSpec::new(SpherePoint::SOUTH, h(0.3)).unwrap();
        let pc = project_circle(&c).unwrap();
        assert!(pc.center[0].abs() < 1e-12 && (pc.radius - 0.3).abs() < 1e-12);
        // Off-center: every point of the spherical circle lands on the image.
        let c = CircleSpec::new(SpherePoint::from_polar(1.1, 2.0), 0.4).unwrap();
        let pc = project_circle(&c).unwrap();
        for k in 0..16 {
            let x = c.center.offset(0.4, k as f64 * 0.4);
            let w = stereo_project(&x).unwrap();
            assert!(pc.signed_distance(w.w).abs() < 1e-10);
        }
        let bad = CircleSpec::new(SpherePoint::from_polar(2.8, 0.0), 0.5).unwrap();
        assert!(project_circle(&bad).is_err());
    }

    #[test]
    fn circle_projection_lands_on_circle() {
        let c = CircleSpec::new(SpherePoint::from_polar(0.3, 0.2), 0.25).unwrap();
        let p = SpherePoint::from_polar(1.0, 1.0);
        let q = c.project(&p);
        assert!(c.signed_distance(&q).abs() < 1e-12);
        assert!(CircleSpec::new(SpherePoint::SOUTH, PI).is_err());
    }
}
