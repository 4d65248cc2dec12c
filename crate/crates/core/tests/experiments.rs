//! Every runner at smoke scale, plus the frozen constant.

use sphere_cover::experiments::config::C0_FROZEN;
use sphere_cover::experiments::{calibrate_c0, run, ExperimentConfig, ExperimentId, Rule};

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig { seed: 5, fast_mode: true, ..ExperimentConfig::default() };
    c.gw.samples = 300;
    c.gw.extinction = vec![(5, 4)];
    c.gw.extinction_samples = 300;
    c.barriers.levels = vec![8, 10];
    c.barriers.mc_samples = 2000;
    c.cover.eps = vec![0.4, 0.3];
    c.cover.trials = 3;
    c.clock.levels = 3;
    c.clock.trials = 2;
    c.clock.grid_factor = 0.5;
    c.clock.single_paths = 2;
    c.clock.single_m = 20;
    c.wasserstein.ns = vec![50, 200];
    c.wasserstein.replicates = 200;
    c.wasserstein.calibration_replicates = 200;
    c.wasserstein.sphere_samples = 100;
    c
}

#[test]
fn every_runner_produces_rows_with_verdicts() {
    let config = small();
    for id in ExperimentId::ALL {
        let r = run(id, &config).unwrap_or_else(|e| panic!("{}: {e}", id.name()));
        assert_eq!(r.experiment, id.name());
        assert!(!r.rows.is_empty(), "{}", id.name());
        for row in &r.rows {
            assert_eq!(row.pass, row.rule.check(row.estimate, row.reference, row.se), "{}", row.id);
            assert!(!(row.required && matches!(row.rule, Rule::Info)), "{}", row.id);
        }
    }
}

#[test]
fn exact_rows_hold_at_smoke_scale() {
    let config = small();
    let exact = |id, name: &str| {
        let r = run(id, &config).unwrap();
        let row = r.rows.iter().find(|row| row.id == name).unwrap_or_else(|| panic!("{name}"));
        assert!(row.pass, "{name}: {} vs {}", row.estimate, row.reference);
    };
    exact(ExperimentId::Cover, "cover.eps_pi.upper");
    exact(ExperimentId::Clock, "clock.m0");
    exact(ExperimentId::Plane, "plane.u_at_r1");
    exact(ExperimentId::Barriers, "trivial_barrier");
    exact(ExperimentId::Gw, "tv.gen1.n0");
}

#[test]
fn frozen_c0_is_the_calibrated_value() {
    let c0 = calibrate_c0(&ExperimentConfig::default()).unwrap();
    assert!((c0 / C0_FROZEN - 1.0).abs() < 1e-12, "{c0}");
}
