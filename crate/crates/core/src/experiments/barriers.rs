//! Barrier probabilities: exact recursion, importance sampling and the
//! implied constants of the asymptotic shapes.

use std::collections::BTreeMap;

use super::report::{Report, Row, Rule, Table};
use super::{new_report, par_trials, ExperimentConfig, ExperimentId};
use crate::barriers::{
    asymptotic_bounds, barrier_prob_dp_with_budget, barrier_prob_is, BarrierCurve, BarrierEvent, Terminal,
};
use crate::error::Result;
use crate::gw::extinction_prob;
use crate::rng::substream;

struct Cell {
    family: &'static str,
    levels: u32,
    z: Option<f64>,
    event: BarrierEvent,
    required: bool,
}

pub fn run_barrier_compare(config: &ExperimentConfig) -> Result<Report> {
    let bc = &config.barriers;
    let samples = config.count(bc.mc_samples, 10, 2000);
    let mut report = new_report(ExperimentId::Barriers, config, samples)?;

    let mut cells = Vec::new();
    for &levels in &bc.levels {
        for &z in &bc.z {
            let event = BarrierEvent::gamma_extinction(levels, z)?;
            cells.push(Cell { family: "gamma_extinction", levels, z: Some(z), event, required: true });
        }
        let event = BarrierEvent::alpha_window(levels, 0.0, levels / 2, 0.0)?;
        cells.push(Cell { family: "alpha_window", levels, z: Some(0.0), event, required: true });
        let event = BarrierEvent::linear_extinction(levels, 2, 1.0)?;
        cells.push(Cell { family: "linear_extinction", levels, z: None, event, required: true });
        let event = BarrierEvent::linear_window(levels, 2, levels / 2, 1.0, 1.0)?;
        cells.push(Cell { family: "linear_window", levels, z: None, event, required: false });
    }

    let results = par_trials(cells.len() as u64, |i| {
        let c = &cells[i as usize];
        let dp = barrier_prob_dp_with_budget(&c.event, bc.state_budget);
        let mc = barrier_prob_is(&c.event, samples, &mut substream(config.seed, "barrier_is", i));
        (dp, mc)
    });

    let mut table = Table::new("cells", &["family", "levels", "z", "start", "dp", "mc", "mc_se", "label", "bound", "implied"]);
    // (family, z, label) -> implied constants over L
    let mut implied: BTreeMap<(String, String, String), (bool, Vec<f64>)> = BTreeMap::new();
    for (c, (dp, mc)) in cells.iter().zip(results) {
        let dp = dp?;
        let z = c.z.map_or("-".to_string(), |z| format!("{z}"));
        let id = format!("{}.L{}.z{}", c.family, c.levels, z);
        let row = Row::new(format!("dp_vs_mc.{id}"), mc.mean, dp, mc.se, Rule::WithinSe { k: 3.0 });
        report.push(if c.required { row } else { row.optional() });
        for b in asymptotic_bounds(&c.event)? {
            let k = dp / b.value;
            report.push(Row::info(format!("implied.{id}.{}", b.label), k));
            table.push(vec![
                c.family.into(),
                c.levels.into(),
                z.clone().into(),
                c.event.start.into(),
                dp.into(),
                mc.mean.into(),
                mc.se.into(),
                b.label.clone().into(),
                b.value.into(),
                k.into(),
            ]);
            implied.entry((c.family.to_string(), z.clone(), b.label)).or_insert((c.required, Vec::new())).1.push(k);
        }
    }
    let spread = |v: &[f64]| {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };
    let mut global: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for ((family, z, label), (required, ks)) in &implied {
        let s = spread(ks);
        let row = Row::new(format!("spread.{family}.z{z}.{label}"), s, bc.spread_max, f64::NAN, Rule::AtMost);
        report.push(if *required { row } else { row.optional() });
        report.fitted.insert(format!("implied_max.{family}.z{z}.{label}"), ks.iter().copied().fold(0.0, f64::max));
        global.entry((family.clone(), label.clone())).or_default().extend(ks);
    }
    // Across z as well; the constant may depend on z, so this is reported
    // without entering the exit status.
    for ((family, label), ks) in &global {
        if implied.keys().filter(|(f, _, l)| f == family && l == label).count() > 1 {
            let s = spread(ks);
            report.push(Row::new(format!("spread_all_z.{family}.{label}"), s, bc.spread_max, f64::NAN, Rule::AtMost).optional());
        }
    }
    report.tables.push(table);

    // A barrier below zero constrains nothing.
    let (start, levels) = (20, 10);
    let free = BarrierEvent::new(
        levels,
        start,
        0,
        BarrierCurve::Table(vec![-1.0; levels as usize + 1]),
        1,
        levels - 1,
        Terminal::Extinction { level: levels },
    )?;
    let p = barrier_prob_dp_with_budget(&free, bc.state_budget)?;
    report.push(Row::new("trivial_barrier", p, extinction_prob(start, levels), f64::NAN, Rule::AbsTol { tol: 1e-12 }));
    Ok(report)
}
