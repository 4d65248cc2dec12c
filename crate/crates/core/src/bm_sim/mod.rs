//! Brownian samplers on the sphere (generator `Delta/2`) and in the chart.
//!
//! Two modes share the hitting-order contract:
//!
//! * [`sphere`]: geodesic Euler stepping with adaptive steps near monitored
//!   circles and bisection landing. Carries a clock.
//! * [`planar`]: walk-on-spheres in the stereographic chart. Hitting order is
//!   conformally invariant, so it reproduces the spherical hitting order
//!   exactly but has no clock.

pub mod disk;
pub mod planar;
pub mod sphere;

pub use disk::{cap_exit_time, sample_disk_exit, unit_disk_exit_time};
pub use planar::{planar_hit_order_walk, PlanarHit, PlanarWalker};
pub use sphere::{geodesic_step, run_until_hit, sample_excursion, Excursion, HitEvent, StepPolicy, WalkerState};

/// Anything that reports successive hits of distinct circles from a fixed
/// list. The spherical and planar samplers both implement it.
pub trait HitSource {
    /// Index of the next circle hit, never equal to `exclude`.
    fn next_hit(&mut self, exclude: Option<usize>) -> crate::Result<usize>;
}
