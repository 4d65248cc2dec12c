//! Concentration of `W_1` between `n` exit angles and their law.

use super::report::{Cell, Report, Row, Rule, Table};
use super::stats::proportion;
use super::{new_report, par_trials, try_par_trials, ExperimentConfig, ExperimentId};
use crate::bm_sim::{run_until_hit, WalkerState};
use crate::error::Result;
use crate::geometry::{h, CircleSpec, SpherePoint};
use crate::rng::substream;
use crate::transport::{fit_c0, nu_k, wasserstein1_ref, wrap_angle, EmpiricalAngles, RefMeasure};

/// Exceedance level of the spherical cross-check.
const SPHERE_ALPHA: f64 = 1e-3;

/// `sqrt(n) W_1` for `replicates` independent samples of size `n`, with the
/// largest quadrature error bound seen.
fn scaled_distances(nu: &RefMeasure, n: usize, replicates: u64, seed: u64, label: &str) -> Result<(Vec<f64>, f64)> {
    let out = try_par_trials(replicates, |i| {
        let mut rng = substream(seed, label, i);
        let sample = EmpiricalAngles::new((0..n).map(|_| nu.sample(&mut rng)).collect())?;
        let w = wasserstein1_ref(&sample, nu)?;
        Ok(((n as f64).sqrt() * w.value, w.error_bound))
    })?;
    let err = out.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok((out.into_iter().map(|o| o.0).collect(), err))
}

/// Fits `c0` on the calibration seed: the largest per-`n` fit.
pub fn calibrate_c0(config: &ExperimentConfig) -> Result<f64> {
    let wc = &config.wasserstein;
    let nu = nu_k(wc.ratio)?;
    let mut c0: f64 = 0.0;
    for &n in &wc.ns {
        let (d, _) = scaled_distances(&nu, n, wc.calibration_replicates, wc.calibration_seed, &format!("calibrate.n{n}"))?;
        c0 = c0.max(fit_c0(&d, &wc.xs, wc.calibration_margin)?);
    }
    Ok(c0)
}

pub fn run_wasserstein(config: &ExperimentConfig) -> Result<Report> {
    let wc = &config.wasserstein;
    let replicates = config.count(wc.replicates, 10, 500);
    let mut report = new_report(ExperimentId::Wasserstein, config, replicates)?;
    let nu = nu_k(wc.ratio)?;
    report.fitted.insert("c0_frozen".into(), wc.c0);
    report.fitted.insert("c0_calibrated".into(), calibrate_c0(config)?);

    let mut table = Table::new("exceedance", &["n", "x", "threshold", "exceed", "replicates", "bound"]);
    let mut quad_err: f64 = 0.0;
    for &n in &wc.ns {
        let (d, err) = scaled_distances(&nu, n, replicates, config.seed, &format!("w1.n{n}"))?;
        quad_err = quad_err.max(err / (n as f64).sqrt());
        for &x in &wc.xs {
            let threshold = x * wc.c0;
            let exceed = d.iter().filter(|&&v| v > threshold).count() as u64;
            let (p, se) = proportion(exceed, replicates);
            let bound = 2.0 * (-x * x).exp();
            report.push(Row::new(format!("exceed.n{n}.x{x}"), p, bound, se, Rule::AtMost));
            table.push(vec![Cell::from(n), x.into(), threshold.into(), exceed.into(), replicates.into(), bound.into()]);
        }
    }
    report.tables.push(table);
    report.push(Row::info("w1.max_quadrature_error", quad_err));

    // Spherical exit angles from the inner circle to the outer one.
    let x = SpherePoint::from_polar(1.3, 2.0);
    let (outer, inner) = (h(wc.sphere_r0), h(wc.sphere_r0 * wc.ratio));
    let circle = [CircleSpec::new(x, outer)?];
    let samples = config.count(wc.sphere_samples, 4, 200);
    let angles = par_trials(samples, |i| {
        let mut state = WalkerState::new(x.offset(inner, 0.0), substream(config.seed, "sphere_exit", i));
        run_until_hit(&mut state, &circle, &wc.sphere_step).map(|hit| wrap_angle(x.azimuth_of(&hit.point)))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let w = wasserstein1_ref(&EmpiricalAngles::new(angles)?, &nu)?;
    let x_star = (2.0 / SPHERE_ALPHA).ln().sqrt();
    report.push(Row::new("sphere_exit.scaled_w1", (samples as f64).sqrt() * w.value, x_star * wc.c0, f64::NAN, Rule::AtMost));
    Ok(report)
}
