//! Cover-time sandwiches against `(log 1/eps)^2`.

use super::report::{Cell, Report, Row, Rule, Table};
use super::stats::SummaryStats;
use super::{new_report, par_trials, ExperimentConfig, ExperimentId};
use crate::barriers::m_eps;
use crate::error::{Error, Result};
use crate::excursions::{cover_time, CoverRun};
use crate::geometry::SpherePoint;
use crate::rng::{stream, substream};

const LIMIT: f64 = 8.0;

pub fn run_cover_time(config: &ExperimentConfig) -> Result<Report> {
    let cc = &config.cover;
    let trials = config.count(cc.trials, 10, 2);
    let mut report = new_report(ExperimentId::Cover, config, trials)?;

    let (lo, hi) = cover_time(std::f64::consts::PI, &cc.engine, &mut stream(config.seed, 0))?;
    report.push(Row::new("cover.eps_pi.lower", lo, 0.0, 0.0, Rule::Exact));
    report.push(Row::new("cover.eps_pi.upper", hi, 0.0, 0.0, Rule::Exact));

    let mut eps = cc.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let run = CoverRun::new(&eps, cc.engine)?;
    let outcomes = par_trials(trials, |i| run.run(SpherePoint::SOUTH, &mut substream(config.seed, "cover", i)));

    let mut table = Table::new("trials", &["trial", "eps", "c_lower", "c_upper", "jumps"]);
    // per eps: (lower, upper) over trials, NaN for failed trials
    let mut per_eps = vec![(Vec::new(), Vec::new()); eps.len()];
    let mut over_budget = 0u64;
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(t) => {
                for (k, b) in t.bounds.iter().enumerate() {
                    per_eps[k].0.push(b.lower);
                    per_eps[k].1.push(b.upper);
                    table.push(vec![Cell::from(i as u64), b.eps.into(), b.lower.into(), b.upper.into(), t.jumps.into()]);
                }
            }
            Err(Error::BudgetExceeded { .. }) => {
                over_budget += 1;
                for (k, e) in eps.iter().enumerate() {
                    per_eps[k].0.push(f64::NAN);
                    per_eps[k].1.push(f64::NAN);
                    table.push(vec![Cell::from(i as u64), (*e).into(), f64::NAN.into(), f64::NAN.into(), Cell::from("budget")]);
                }
            }
            Err(e) => return Err(e),
        }
    }
    report.tables.push(table);
    report.push(Row::new("cover.budget_exceeded", over_budget as f64, 0.0, 0.0, Rule::Exact));

    let mut summary = Table::new("by_eps", &["eps", "endpoint", "count", "mean_ratio", "se_ratio", "iqr_sqrt_c_minus_m"]);
    // (mean ratio, iqr of sqrt(C) - m_eps) per eps and endpoint
    let mut stat = Vec::new();
    for (k, &e) in eps.iter().enumerate() {
        let l2 = (1.0 / e).ln().powi(2);
        let mut both = [(0.0, 0.0, 0.0); 2];
        for (j, (name, values)) in [("lower", &per_eps[k].0), ("upper", &per_eps[k].1)].into_iter().enumerate() {
            let ratios: Vec<f64> = values.iter().map(|c| c / l2).collect();
            let centred: Vec<f64> = values.iter().map(|c| c.sqrt() - m_eps(e)).collect();
            let r = SummaryStats::of(&ratios);
            let s = SummaryStats::of(&centred);
            summary.push(vec![e.into(), name.into(), r.count.into(), r.mean.into(), r.se.into(), s.iqr().into()]);
            report.push(Row::new(format!("ratio.eps{e}.{name}"), r.mean, LIMIT, r.se, Rule::Info));
            report.push(Row::info(format!("median_sqrt_c_minus_m.eps{e}.{name}"), s.q50));
            both[j] = (r.mean, r.se, s.iqr());
        }
        stat.push(both);
    }
    report.tables.push(summary);

    let names = ["lower", "upper"];
    if let (Some(&e), Some(last)) = (eps.last(), stat.last()) {
        for (j, name) in names.iter().enumerate() {
            let (m, se, _) = last[j];
            let [lo, hi] = cc.ratio_range;
            report.push(Row::new(format!("ratio_range.eps{e}.{name}"), m, LIMIT, se, Rule::Range { lo, hi }));
        }
    }
    for k in 1..eps.len() {
        let (coarse, fine) = (eps[k - 1], eps[k]);
        for (j, name) in names.iter().enumerate() {
            let (a, b) = (stat[k - 1][j], stat[k][j]);
            report.push(Row::new(
                format!("trend.eps{coarse}_to_eps{fine}.{name}"),
                (b.0 - LIMIT).abs(),
                (a.0 - LIMIT).abs(),
                (a.1 * a.1 + b.1 * b.1).sqrt(),
                Rule::AtMost,
            ));
            report.push(Row::new(format!("iqr.eps{coarse}_to_eps{fine}.{name}"), b.2, a.2, f64::NAN, Rule::AtMost));
        }
    }
    for g in run.grids() {
        report.fitted.insert(format!("grid_points.eps{}", g.eps), g.index.len() as f64);
    }
    Ok(report)
}
