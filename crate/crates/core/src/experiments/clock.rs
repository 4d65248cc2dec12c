//! Excursion clocks `tau_x(s_L(z))` over a grid of centres on one path.

use super::report::{Cell, Report, Row, Rule, Table};
use super::stats::{proportion, SummaryStats};
use super::{new_report, try_par_trials, ExperimentConfig, ExperimentId};
use crate::barriers::s_l;
use crate::error::Result;
use crate::excursions::grid::{cover_with_radius, COVER_PROBES};
use crate::excursions::tracker::tau_x_radii;
use crate::excursions::{track_centers, StopRule, WatchRadii};
use crate::geometry::{h, kappa, SpherePoint};
use crate::rng::substream;

pub fn run_clock_check(config: &ExperimentConfig) -> Result<Report> {
    let cc = &config.clock;
    let trials = config.count(cc.trials, 10, 5);
    let mut report = new_report(ExperimentId::Clock, config, trials)?;

    // Only the first annulus is watched; r0 is larger than the nested
    // schedule allows.
    let (h0, h1) = (h(cc.r0), h(cc.r0 / std::f64::consts::E));
    let k = kappa(h1, h0)?;
    let s = s_l(cc.levels, cc.z);
    let m = s.round() as u64;
    let target = k * s;
    let (units, covering) = cover_with_radius(cc.grid_factor * h1, &[], COVER_PROBES)?;
    let centers: Vec<SpherePoint> = units.iter().map(|&u| SpherePoint::from_direction(u)).collect();
    report.fitted.insert("grid_points".into(), centers.len() as f64);
    report.fitted.insert("grid_covering_radius".into(), covering);
    report.fitted.insert("m".into(), m as f64);

    let radii = WatchRadii { outer: h0, inner: h1, deep: None };
    let runs = try_par_trials(trials, |i| {
        let run = track_centers(
            &centers,
            radii,
            StopRule::Completions(m),
            SpherePoint::SOUTH,
            &cc.policy,
            substream(config.seed, "clock", i),
        )?;
        Ok(run.logs.iter().map(|l| l.completion_times[m as usize - 1] / target).collect::<Vec<f64>>())
    })?;

    let mut table = Table::new("trials", &["trial", "within_band", "min_ratio", "max_ratio", "mean_ratio"]);
    let mut hits = 0;
    let mut fractions = Vec::new();
    for (i, ratios) in runs.iter().enumerate() {
        let within = ratios.iter().filter(|r| (*r - 1.0).abs() <= cc.band).count();
        if within == ratios.len() {
            hits += 1;
        }
        fractions.push(within as f64 / ratios.len() as f64);
        let st = SummaryStats::of(ratios);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        table.push(vec![Cell::from(i as u64), within.into(), min.into(), max.into(), st.mean.into()]);
    }
    report.tables.push(table);
    let (freq, se) = proportion(hits, trials);
    report.push(Row::new("clock.joint_frequency", freq, cc.required_frequency, se, Rule::AtLeast));
    report.push(Row::info("clock.mean_fraction_within_band", SummaryStats::of(&fractions).mean));
    let all: Vec<f64> = runs.iter().flatten().copied().collect();
    report.push(Row::info("clock.pooled_ratio_sd", SummaryStats::of(&all).variance.sqrt()));

    let x = SpherePoint::from_polar(1.0, 0.0);
    let single_m = config.count(cc.single_m, 5, 50);
    let per_path = try_par_trials(cc.single_paths, |i| {
        Ok(tau_x_radii(single_m, x, h0, h1, &cc.single_policy, substream(config.seed, "clock_single", i))? / single_m as f64)
    })?;
    let st = SummaryStats::of(&per_path);
    report.push(Row::new("clock.single_mean_per_excursion", st.mean, k, st.se, Rule::RelTol { tol: 0.02 }));
    let zero = tau_x_radii(0, x, h0, h1, &cc.single_policy, substream(config.seed, "clock_zero", 0))?;
    report.push(Row::new("clock.m0", zero, 0.0, 0.0, Rule::Exact));
    Ok(report)
}
