//! Planar time in `B(0, R)` per excursion `r0/e -> r0 -> r0/e`.
//!
//! The walk reflects at `|w| = R`, so the time it records is the time spent
//! inside the disc. The process is rotation invariant, so only the radius is
//! tracked.

use std::f64::consts::{E, PI};

use rand::Rng;

use super::kernels::chunk_sizes;
use super::report::{Report, Row, Rule};
use super::stats::SummaryStats;
use super::{new_report, try_par_trials, ExperimentConfig, ExperimentId};
use crate::bm_sim::unit_disk_exit_time;
use crate::error::{domain, Result};
use crate::rng::substream;

/// Expected time in `B(0, R)` to reach radius `r1` from radius `r`, with
/// reflection at `R`.
pub fn reflected_return_time(r: f64, r1: f64, big_r: f64) -> f64 {
    big_r * big_r * (r / r1).ln() - (r * r - r1 * r1) / 2.0
}

/// `a_R = R^2 log(r0 / r1)`: outward leg `(r0^2 - r1^2) / 2` plus the return.
pub fn a_r(r0: f64, r1: f64, big_r: f64) -> f64 {
    big_r * big_r * (r0 / r1).ln()
}

fn jump<R: Rng>(rho: f64, d: f64, t: &mut f64, rng: &mut R) -> f64 {
    *t += d * d * unit_disk_exit_time(rng);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    // |w + d e^{i phi}| with w on the positive axis
    (rho * rho + d * d + 2.0 * rho * d * phi.cos()).max(0.0).sqrt()
}

/// One excursion's time inside `B(0, R)`.
pub fn excursion_time<R: Rng>(r0: f64, r1: f64, big_r: f64, shell: f64, reflect_step: f64, rng: &mut R) -> Result<f64> {
    if !(0.0 < r1 && r1 < r0 && r0 <= big_r) {
        return Err(domain(format!("need 0 < r1 < r0 <= R, got {r1}, {r0}, {big_r}")));
    }
    let tol = shell * r1;
    let near = reflect_step * big_r;
    let mut t = 0.0;
    let mut rho = r1;
    loop {
        let d = r0 - rho;
        if d <= tol {
            break;
        }
        rho = jump(rho, d, &mut t, rng);
    }
    loop {
        let d_in = rho - r1;
        if d_in <= tol {
            break;
        }
        let d_out = big_r - rho;
        if d_out >= near {
            rho = jump(rho, d_in.min(d_out), &mut t, rng);
        } else {
            rho = jump(rho, d_in.min(near), &mut t, rng);
            if rho > big_r {
                rho = 2.0 * big_r - rho;
            }
        }
    }
    Ok(t)
}

pub fn run_plane_ar(config: &ExperimentConfig) -> Result<Report> {
    let pc = &config.plane;
    let n = config.count(pc.excursions, 10, 500);
    let mut report = new_report(ExperimentId::Plane, config, n)?;
    let r0 = pc.r0;
    let r1 = r0 / E;
    report.push(Row::new("plane.u_at_r1", reflected_return_time(r1, r1, 1.0), 0.0, 0.0, Rule::Exact));
    for &big_r in &pc.radii {
        let identity = reflected_return_time(r0, r1, big_r) + (r0 * r0 - r1 * r1) / 2.0;
        report.push(Row::new(format!("plane.R{big_r}.identity"), identity, a_r(r0, r1, big_r), 0.0, Rule::AbsTol { tol: 1e-12 * big_r * big_r }));
        report.push(Row::new(format!("plane.R{big_r}.a_r_closed"), a_r(r0, r1, big_r), big_r * big_r, 0.0, Rule::AbsTol { tol: 1e-12 * big_r * big_r }));

        let sizes = chunk_sizes(n, 100);
        let label = format!("plane.R{big_r}");
        let parts = try_par_trials(sizes.len() as u64, |c| {
            let mut rng = substream(config.seed, &label, c);
            (0..sizes[c as usize]).map(|_| excursion_time(r0, r1, big_r, pc.shell, pc.reflect_step, &mut rng)).collect::<Result<Vec<f64>>>()
        })?;
        let times: Vec<f64> = parts.into_iter().flatten().collect();
        let s = SummaryStats::of(&times);
        report.push(Row::new(format!("plane.R{big_r}.mean_time"), s.mean, big_r * big_r, s.se, Rule::RelTol { tol: pc.rel_tol }));
        report.push(Row::new(format!("plane.R{big_r}.mean_time_within_3se"), s.mean, big_r * big_r, s.se, Rule::WithinSe { k: 3.0 }).optional());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn return_time_solves_the_radial_problem() {
        // u'' + u'/r = -2, u(r1) = 0, u'(R) = 0
        let (r1, big_r) = (0.2, 1.5);
        let u = |r: f64| reflected_return_time(r, r1, big_r);
        let hstep = 1e-4;
        for r in [0.3, 0.7, 1.2] {
            let d2 = (u(r + hstep) - 2.0 * u(r) + u(r - hstep)) / (hstep * hstep);
            let d1 = (u(r + hstep) - u(r - hstep)) / (2.0 * hstep);
            assert!((d2 + d1 / r + 2.0).abs() < 1e-5);
        }
        assert_eq!(u(r1), 0.0);
        assert!(((u(big_r + hstep) - u(big_r - hstep)) / (2.0 * hstep)).abs() < 1e-8);
    }

    #[test]
    fn short_run_is_near_r_squared() {
        let mut rng = stream(3, 0);
        let times: Vec<f64> = (0..4000).map(|_| excursion_time(0.5, 0.5 / E, 1.0, 1e-6, 1e-3, &mut rng).unwrap()).collect();
        let s = SummaryStats::of(&times);
        assert!((s.mean - 1.0).abs() < 4.0 * s.se, "{} +- {}", s.mean, s.se);
    }
}
