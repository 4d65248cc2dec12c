//! Closed-form identities, annulus hitting probabilities and the commute
//! time.

use std::f64::consts::{E, PI};

use rand::Rng;

use super::report::{Cell, Report, Row, Rule, Table};
use super::stats::{proportion, SummaryStats};
use super::{new_report, try_par_trials, ExperimentConfig, ExperimentId};
use crate::bm_sim::{sample_excursion, PlanarWalker, WalkerState};
use crate::error::Result;
use crate::geometry::{
    annulus_hit_prob, expected_hit_inner, expected_hit_outer, h, kappa, poisson_kernel_sphere, stereo_inverse,
    stereo_project, v3, CircleSpec, PlaneCircle, PlanePoint, SpherePoint,
};
use crate::rng::substream;

const CHUNKS: u64 = 100;
const WALK_BUDGET: u64 = 100_000_000;

/// Sizes of `chunks` near-equal parts of `n`.
pub(crate) fn chunk_sizes(n: u64, chunks: u64) -> Vec<u64> {
    let chunks = chunks.min(n).max(1);
    (0..chunks).map(|c| n / chunks + u64::from(c < n % chunks)).collect()
}

fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

pub fn run_kernel_suite(config: &ExperimentConfig) -> Result<Report> {
    let kc = &config.kernels;
    let hit_samples = config.count(kc.hit_samples, 20, 1000);
    let commutes = config.count(kc.commute_excursions.max(kc.hit_inner_samples), 10, 500);
    let mut report = new_report(ExperimentId::Kernels, config, hit_samples)?;
    closed_form(config.seed, &mut report)?;

    let mut table = Table::new("annulus_hits", &["rho1", "rho2", "rho3", "samples", "hits", "estimate", "reference"]);
    for (i, &[r1, r2, r3]) in kc.annuli.iter().enumerate() {
        let circles = [PlaneCircle { center: [0.0, 0.0], radius: r1 }, PlaneCircle { center: [0.0, 0.0], radius: r3 }];
        let sizes = chunk_sizes(hit_samples, CHUNKS);
        let label = format!("annulus.{i}");
        let hits: u64 = try_par_trials(sizes.len() as u64, |c| {
            let mut walker =
                PlanarWalker::new(PlanePoint::new(r2, 0.0), &circles, kc.planar_shell, WALK_BUDGET, substream(config.seed, &label, c))?;
            let mut hits = 0;
            for _ in 0..sizes[c as usize] {
                walker.position = [r2, 0.0];
                walker.steps = 0;
                if walker.walk_to_hit(None)?.circle_id == 0 {
                    hits += 1;
                }
            }
            Ok(hits)
        })?
        .into_iter()
        .sum();
        let (p, se) = proportion(hits, hit_samples);
        let reference = annulus_hit_prob(r1, r2, r3)?;
        report.push(Row::new(format!("hit_prob.annulus{i}"), p, reference, se, Rule::WithinSe { k: 3.0 }));
        table.push(vec![r1.into(), r2.into(), r3.into(), hit_samples.into(), hits.into(), p.into(), reference.into()]);
    }
    // On the inner circle the hit is immediate.
    let (r, r3) = (0.2, 1.0);
    let circles = [PlaneCircle { center: [0.0, 0.0], radius: r }, PlaneCircle { center: [0.0, 0.0], radius: r3 }];
    let mut walker =
        PlanarWalker::new(PlanePoint::new(r, 0.0), &circles, kc.planar_shell, WALK_BUDGET, substream(config.seed, "degenerate", 0))?;
    let first = if walker.walk_to_hit(None)?.circle_id == 0 { 1.0 } else { 0.0 };
    report.push(Row::new("hit_prob.degenerate", first, annulus_hit_prob(r, r, r3)?, 0.0, Rule::Exact));
    report.tables.push(table);

    commute_rows(config, commutes, &mut report)?;
    Ok(report)
}

fn closed_form(seed: u64, report: &mut Report) -> Result<()> {
    let mut rng = substream(seed, "closed_form", 0);
    let mut round_trip: f64 = 0.0;
    for _ in 0..10_000 {
        let u = random_unit(&mut rng);
        if u[2] > 1.0 - 1e-6 {
            continue;
        }
        let p = SpherePoint::from_direction(u);
        let back = stereo_inverse(&stereo_project(&p)?);
        round_trip = round_trip.max(v3::norm(v3::sub(back.coords(), p.coords())));
        let w = PlanePoint::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let again = stereo_project(&stereo_inverse(&w))?;
        let err = (again.w[0] - w.w[0]).hypot(again.w[1] - w.w[1]) / w.norm().max(1.0);
        round_trip = round_trip.max(err);
    }
    report.push(Row::new("closed.projection_round_trip", round_trip, 1e-10, f64::NAN, Rule::AtMost));

    let mut tan_err: f64 = 0.0;
    for i in 0..=900 {
        let r = 10f64.powf(-6.0 + i as f64 / 100.0);
        tan_err = tan_err.max(((h(r) / 2.0).tan() - r / 2.0).abs() / (r / 2.0));
    }
    report.push(Row::new("closed.tan_half_h", tan_err, 1e-12, f64::NAN, Rule::AtMost));

    // Uniform nodes integrate the smooth periodic kernel spectrally.
    let nodes = 4096;
    let mut poisson: f64 = 0.0;
    for _ in 0..50 {
        let c = SpherePoint::from_direction(random_unit(&mut rng));
        let r = rng.random_range(0.05..3.0);
        let z = c.offset(rng.random_range(0.0..0.8) * r, rng.random_range(0.0..2.0 * PI));
        let circle = CircleSpec::new(c, r)?;
        let mut sum = 0.0;
        for j in 0..nodes {
            let x = c.offset(r, 2.0 * PI * j as f64 / nodes as f64);
            sum += poisson_kernel_sphere(&circle, &z, &x)?;
        }
        poisson = poisson.max((sum / nodes as f64 - 1.0).abs());
    }
    report.push(Row::new("closed.poisson_normalization", poisson, 1e-6, f64::NAN, Rule::AtMost));

    let mut additivity: f64 = 0.0;
    for _ in 0..10_000 {
        let mut r = [rng.random_range(1e-6..PI), rng.random_range(1e-6..PI), rng.random_range(1e-6..PI)];
        r.sort_by(f64::total_cmp);
        if r[0] == r[1] || r[1] == r[2] {
            continue;
        }
        let d = kappa(r[0], r[1])? + kappa(r[1], r[2])? - kappa(r[0], r[2])?;
        additivity = additivity.max(d.abs());
    }
    report.push(Row::new("closed.kappa_additivity", additivity, 1e-12, f64::NAN, Rule::AtMost));
    Ok(())
}

fn commute_rows(config: &ExperimentConfig, excursions: u64, report: &mut Report) -> Result<()> {
    let kc = &config.kernels;
    let (a, b) = (h(kc.r0 / E), h(kc.r0));
    let x = SpherePoint::from_polar(2.0, 0.7);
    let sizes = chunk_sizes(excursions, CHUNKS);
    let parts = try_par_trials(sizes.len() as u64, |c| {
        let mut state = WalkerState::new(x.offset(b, 0.0), substream(config.seed, "commute", c));
        let mut out = Vec::with_capacity(sizes[c as usize] as usize);
        for _ in 0..sizes[c as usize] {
            let e = sample_excursion(&mut state, &x, a, b, &kc.step)?;
            out.push((e.inward_time(), e.duration()));
        }
        Ok(out)
    })?;
    let all: Vec<(f64, f64)> = parts.into_iter().flatten().collect();
    let inward: Vec<f64> = all.iter().take(kc.hit_inner_samples as usize).map(|e| e.0).collect();
    let outward: Vec<f64> = all.iter().take(kc.hit_inner_samples as usize).map(|e| e.1 - e.0).collect();
    let commute: Vec<f64> = all.iter().take(kc.commute_excursions as usize).map(|e| e.1).collect();

    let k = kappa(a, b)?;
    let s = SummaryStats::of(&commute);
    report.push(Row::new("commute.mean", s.mean, k, s.se, Rule::RelTol { tol: kc.commute_rel_tol }));
    report.push(Row::new("commute.mean_within_3se", s.mean, k, s.se, Rule::WithinSe { k: 3.0 }).optional());
    let si = SummaryStats::of(&inward);
    report.push(Row::new("hit_inner.mean", si.mean, expected_hit_inner(a, b)?, si.se, Rule::RelTol { tol: kc.hit_inner_rel_tol }));
    let so = SummaryStats::of(&outward);
    report.push(
        Row::new("hit_outer.mean", so.mean, expected_hit_outer(a, b)?, so.se, Rule::RelTol { tol: kc.hit_inner_rel_tol }).optional(),
    );
    let mut table = Table::new("commutes", &["index", "inward", "duration"]);
    for (i, (t_in, d)) in all.iter().enumerate() {
        table.push(vec![Cell::from(i as u64), (*t_in).into(), (*d).into()]);
    }
    report.tables.push(table);
    report.fitted.insert("commute_cv".into(), s.variance.sqrt() / s.mean);
    Ok(())
}
