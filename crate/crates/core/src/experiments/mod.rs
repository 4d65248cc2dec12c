//! Seeded experiment runners. Each returns a [`Report`] of checked rows,
//! raw tables and fitted constants; [`emit_report`] writes it to disk.
//!
//! Trials draw from `substream(seed, label, trial)` and are reduced in trial
//! order, so results do not depend on the worker count.

pub mod config;
pub mod report;
pub mod stats;

mod barriers;
mod clock;
mod cover;
mod gw;
mod kernels;
mod plane;
mod wasserstein;

use rayon::prelude::*;

pub use barriers::run_barrier_compare;
pub use clock::run_clock_check;
pub use config::{ExperimentConfig, ExperimentId};
pub use cover::run_cover_time;
pub use gw::run_gw_equivalence;
pub use kernels::run_kernel_suite;
pub use plane::{excursion_time as plane_excursion_time, run_plane_ar};
pub use report::{emit_report, Report, Row, Rule, Table};
pub use wasserstein::{calibrate_c0, run_wasserstein};

use crate::error::{Error, Result};

/// Worker count: `SCL_THREADS` if set, else the machine's parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var("SCL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("SCL_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` for every trial index on the worker pool, in index order.
pub(crate) fn par_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// [`par_trials`] for fallible trials; the first error in index order wins.
pub(crate) fn try_par_trials<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    par_trials(n, f).into_iter().collect()
}

/// Runs one experiment on a pool sized by [`worker_count`].
pub fn run(id: ExperimentId, config: &ExperimentConfig) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match id {
        ExperimentId::Kernels => run_kernel_suite(config),
        ExperimentId::Gw => run_gw_equivalence(config),
        ExperimentId::Barriers => run_barrier_compare(config),
        ExperimentId::Cover => run_cover_time(config),
        ExperimentId::Clock => run_clock_check(config),
        ExperimentId::Plane => run_plane_ar(config),
        ExperimentId::Wasserstein => run_wasserstein(config),
    })
}

pub(crate) fn new_report(id: ExperimentId, config: &ExperimentConfig, trials: u64) -> Result<Report> {
    Ok(Report::new(id.name(), config.seed, trials, serde_json::to_value(config)?))
}
