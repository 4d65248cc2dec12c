//! Traversal counts against the geometric branching law.

use super::report::{Cell, Report, Row, Rule, Table};
use super::stats::{chi_square, tv_distance};
use super::{new_report, try_par_trials, ExperimentConfig, ExperimentId};
use crate::error::Result;
use crate::excursions::traversal_process;
use crate::geometry::{RadiusSchedule, SpherePoint};
use crate::gw::{deviation_tail, extinction_prob, law_after, CountDist};
use crate::rng::substream;

fn pmf(d: &CountDist) -> Vec<f64> {
    (0..=d.cap()).map(|k| d.get(k)).collect()
}

pub fn run_gw_equivalence(config: &ExperimentConfig) -> Result<Report> {
    let gc = &config.gw;
    let samples = config.count(gc.samples, 10, 500);
    let mut report = new_report(ExperimentId::Gw, config, samples)?;
    let x = SpherePoint::from_polar(1.2, 0.4);

    let mut laws = Table::new("gen_laws", &["n", "generation", "k", "empirical", "exact"]);
    let schedule = RadiusSchedule::new(gc.r0, 2)?;
    for &n in &gc.gen1_n {
        let label = format!("gen1.n{n}");
        let t2 = try_par_trials(samples, |i| {
            Ok(traversal_process(x, &schedule, n, &gc.sampler, substream(config.seed, &label, i))?.t(2))
        })?;
        let law = pmf(&law_after(n, 1)?);
        push_law(&mut laws, n, 1, &law, &t2);
        report.push(Row::new(format!("tv.gen1.n{n}"), tv_distance(&law, &t2), gc.tv_max, f64::NAN, Rule::AtMost));
        let (_, dof, p) = chi_square(&law, &t2, 5.0);
        report.push(Row::new(format!("chi2_p.gen1.n{n}"), p, dof as f64, f64::NAN, Rule::Info));
    }
    // No excursions, no traversals.
    let t0 = traversal_process(x, &schedule, 0, &gc.sampler, substream(config.seed, "gen1.n0", 0))?.t(2);
    report.push(Row::new("tv.gen1.n0", tv_distance(&pmf(&law_after(0, 1)?), &[t0]), 0.0, 0.0, Rule::Exact));

    let deep = RadiusSchedule::new(gc.r0, gc.path_levels + 1)?;
    let n = gc.path_n;
    let paths = try_par_trials(samples, |i| {
        traversal_process(x, &deep, n, &gc.sampler, substream(config.seed, "paths", i)).map(|r| r.counts)
    })?;
    for l in 1..=gc.path_levels {
        let tl: Vec<u64> = paths.iter().map(|c| c[l + 1]).collect();
        let law = pmf(&law_after(n, l as u32)?);
        push_law(&mut laws, n, l as u32, &law, &tl);
        report.push(Row::info(format!("tv.path.n{n}.gen{l}"), tv_distance(&law, &tl)));
        report.push(Row::info(format!("chi2_p.path.n{n}.gen{l}"), chi_square(&law, &tl, 5.0).2));
    }
    report.tables.push(laws);

    let ext_samples = config.count(gc.extinction_samples, 10, 500);
    let mut ext = Table::new("extinction", &["n", "levels", "samples", "extinct", "exact"]);
    for &(n, levels) in &gc.extinction {
        let schedule = RadiusSchedule::new(gc.r0, levels as usize)?;
        let label = format!("extinction.n{n}.L{levels}");
        let extinct: u64 = try_par_trials(ext_samples, |i| {
            let r = traversal_process(x, &schedule, n, &gc.sampler, substream(config.seed, &label, i))?;
            Ok(u64::from(r.t(levels as usize) == 0))
        })?
        .into_iter()
        .sum();
        let exact = extinction_prob(n, levels - 1);
        let p = extinct as f64 / ext_samples as f64;
        // The reference variance stays informative when no path goes extinct.
        let se = (exact * (1.0 - exact) / ext_samples as f64).sqrt();
        report.push(Row::new(format!("extinction.n{n}.L{levels}"), p, exact, se, Rule::WithinSe { k: 3.0 }));
        ext.push(vec![n.into(), levels.into(), ext_samples.into(), extinct.into(), exact.into()]);
    }
    report.tables.push(ext);

    let mut dev = Table::new("deviation", &["n", "l", "theta", "tail", "gaussian", "ratio"]);
    let mut c_fit: f64 = 0.0;
    for &n in &gc.deviation_n {
        for &l in &gc.deviation_l {
            for &theta in &gc.deviation_theta {
                let tail = deviation_tail(n, l, theta)?;
                let gauss = (-theta * theta / (2.0 * l as f64)).exp();
                c_fit = c_fit.max(tail / gauss);
                dev.push(vec![n.into(), l.into(), theta.into(), tail.into(), gauss.into(), (tail / gauss).into()]);
            }
        }
    }
    report.push(Row::new("deviation.c_fit", c_fit, gc.deviation_c_max, f64::NAN, Rule::AtMost));
    report.fitted.insert("deviation_c".into(), c_fit);
    report.tables.push(dev);
    Ok(report)
}

fn push_law(table: &mut Table, n: u64, generation: u32, law: &[f64], samples: &[u64]) {
    let top = samples.iter().copied().max().unwrap_or(0) as usize;
    let len = samples.len() as f64;
    for k in 0..=top.max(law.len().saturating_sub(1)) {
        let e = samples.iter().filter(|&&s| s as usize == k).count() as f64 / len;
        let p = law.get(k).copied().unwrap_or(0.0);
        if e > 0.0 || p > 1e-12 {
            table.push(vec![Cell::from(n), generation.into(), k.into(), e.into(), p.into()]);
        }
    }
}
