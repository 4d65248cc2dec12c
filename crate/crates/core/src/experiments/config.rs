//! Experiment configuration. Every section has defaults; unknown keys are
//! rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bm_sim::StepPolicy;
use crate::error::{Error, Result};
use crate::excursions::{CoverConfig, Sampler, TrackPolicy};

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Kernels,
    Gw,
    Barriers,
    Cover,
    Clock,
    Plane,
    Wasserstein,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Kernels,
        ExperimentId::Gw,
        ExperimentId::Barriers,
        ExperimentId::Cover,
        ExperimentId::Clock,
        ExperimentId::Plane,
        ExperimentId::Wasserstein,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Kernels => "kernels",
            ExperimentId::Gw => "gw",
            ExperimentId::Barriers => "barriers",
            ExperimentId::Cover => "cover",
            ExperimentId::Clock => "clock",
            ExperimentId::Plane => "plane",
            ExperimentId::Wasserstein => "wasserstein",
        }
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentId>,
    pub seed: u64,
    /// Overrides each experiment's main replicate count.
    pub trials: Option<u64>,
    /// Scales replicate counts down for smoke runs; verdicts are still
    /// computed at the spec tolerances.
    pub fast_mode: bool,
    pub out: Option<PathBuf>,
    pub kernels: KernelsConfig,
    pub gw: GwConfig,
    pub barriers: BarriersConfig,
    pub cover: CoverExperimentConfig,
    pub clock: ClockConfig,
    pub plane: PlaneConfig,
    pub wasserstein: WassersteinConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `default` unless `trials` overrides it, divided by `fast_div` (at
    /// least `floor`) in fast mode.
    pub fn count(&self, default: u64, fast_div: u64, floor: u64) -> u64 {
        let base = self.trials.unwrap_or(default);
        if self.fast_mode {
            (base / fast_div).max(floor).min(base)
        } else {
            base
        }
    }
}

/// Closed-form checks, hitting probabilities and hitting/commute times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelsConfig {
    /// Walks per annulus configuration.
    pub hit_samples: u64,
    /// `(rho1, rho2, rho3)` in the chart.
    pub annuli: Vec<[f64; 3]>,
    /// Walk-on-spheres shell, relative to the smallest circle.
    pub planar_shell: f64,
    /// Excursions for the commute-time mean.
    pub commute_excursions: u64,
    /// Hits for the inner hitting-time mean.
    pub hit_inner_samples: u64,
    /// `r0` of the commute annulus `h(r0 / e) < h(r0)`.
    pub r0: f64,
    pub step: StepPolicy,
    pub commute_rel_tol: f64,
    pub hit_inner_rel_tol: f64,
}

impl Default for KernelsConfig {
    fn default() -> Self {
        let e = std::f64::consts::E;
        Self {
            hit_samples: 100_000,
            annuli: vec![
                [(-10.0f64).exp(), (-1.0f64).exp(), 1.0],
                [0.1, 0.5, 1.0],
                [0.2, 0.3, 0.9],
                [0.01, 0.1, 1.0],
                [1.0 / e, 1.0 / e.sqrt(), 1.0],
                [0.05, 0.06, 2.0],
                [0.5, 1.5, 4.0],
                [0.3, 0.31, 0.32],
                [1e-4, 1e-2, 1.0],
                [0.7, 0.9, 3.0],
            ],
            planar_shell: 1e-6,
            commute_excursions: 10_000,
            hit_inner_samples: 10_000,
            r0: 1.0,
            step: StepPolicy { dt_max: 1e-3, refine_factor: 5.0, shell: 1e-4, budget: 2_000_000_000 },
            commute_rel_tol: 0.02,
            hit_inner_rel_tol: 0.03,
        }
    }
}

/// Traversal laws against the exact branching law, extinction and the
/// deviation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GwConfig {
    pub samples: u64,
    /// `n` for the generation-1 laws.
    pub gen1_n: Vec<u64>,
    pub tv_max: f64,
    /// `n` and depth for the multi-generation comparison.
    pub path_n: u64,
    pub path_levels: usize,
    pub r0: f64,
    pub sampler: Sampler,
    /// `(n, L)` extinction cells.
    pub extinction: Vec<(u64, u32)>,
    pub extinction_samples: u64,
    pub deviation_n: Vec<u64>,
    pub deviation_l: Vec<u32>,
    pub deviation_theta: Vec<f64>,
    pub deviation_c_max: f64,
}

impl Default for GwConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            gen1_n: vec![1, 3, 10],
            tv_max: 0.02,
            path_n: 3,
            path_levels: 4,
            r0: 1.0,
            sampler: Sampler::Planar { shell: 1e-6, budget: 100_000_000 },
            extinction: vec![(200, 10), (20, 10), (5, 4)],
            extinction_samples: 10_000,
            deviation_n: vec![50, 200],
            deviation_l: vec![2, 5, 10],
            deviation_theta: (1..=8).map(f64::from).collect(),
            deviation_c_max: 10.0,
        }
    }
}

/// Barrier probabilities by exact recursion, importance-sampled Monte Carlo
/// and the asymptotic shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarriersConfig {
    pub levels: Vec<u32>,
    pub z: Vec<f64>,
    pub mc_samples: u64,
    /// Largest allowed ratio of implied constants within a family.
    pub spread_max: f64,
    pub state_budget: usize,
}

impl Default for BarriersConfig {
    fn default() -> Self {
        Self {
            levels: vec![10, 14, 18, 22],
            z: vec![0.0, 1.0, 2.0],
            mc_samples: 40_000,
            spread_max: 3.0,
            state_budget: crate::barriers::DEFAULT_STATE_BUDGET,
        }
    }
}

/// Cover times on one path per trial for several `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverExperimentConfig {
    pub eps: Vec<f64>,
    pub trials: u64,
    pub engine: CoverConfig,
    pub ratio_range: [f64; 2],
}

impl Default for CoverExperimentConfig {
    fn default() -> Self {
        Self { eps: vec![0.05, 0.02, 0.01], trials: 50, engine: CoverConfig::default(), ratio_range: [6.0, 10.0] }
    }
}

/// Excursion clocks `tau_x(s_L(z))` over a grid of centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClockConfig {
    pub levels: u32,
    pub z: f64,
    /// `r0` of the excursion annulus `h(r0 / e) < h(r0)`.
    pub r0: f64,
    /// Grid covering radius as a fraction of `h_1`.
    pub grid_factor: f64,
    pub band: f64,
    pub required_frequency: f64,
    pub trials: u64,
    pub policy: TrackPolicy,
    /// Paths for the single-centre mean `tau / m`.
    pub single_paths: u64,
    /// Excursions per single-centre path.
    pub single_m: u64,
    pub single_policy: TrackPolicy,
}

impl Default for ClockConfig {
    fn default() -> Self {
        Self {
            levels: 8,
            z: 0.0,
            r0: 3.3,
            grid_factor: 0.1,
            band: 0.1,
            required_frequency: 0.95,
            trials: 100,
            policy: TrackPolicy {
                step: StepPolicy { dt_max: 1e-3, refine_factor: 5.0, shell: 1e-3, budget: 2_000_000_000 },
                adaptive: false,
                bridge: true,
            },
            single_paths: 20,
            single_m: 500,
            single_policy: TrackPolicy {
                step: StepPolicy { dt_max: 1e-3, refine_factor: 5.0, shell: 1e-4, budget: 2_000_000_000 },
                adaptive: true,
                bridge: false,
            },
        }
    }
}

/// Planar time spent in `B(0, R)` per excursion `r1 -> r0 -> r1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneConfig {
    pub r0: f64,
    pub radii: Vec<f64>,
    pub excursions: u64,
    /// Absorption shell at the circles, relative to `r1`.
    pub shell: f64,
    /// Step radius used next to the reflecting circle, relative to `R`.
    pub reflect_step: f64,
    pub rel_tol: f64,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        Self { r0: 0.5, radii: vec![1.0, 2.0], excursions: 10_000, shell: 1e-6, reflect_step: 1e-3, rel_tol: 0.03 }
    }
}

/// Concentration of the Wasserstein distance between `nu_k` samples and
/// `nu_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WassersteinConfig {
    /// Radius ratio of `nu_k`.
    pub ratio: f64,
    pub ns: Vec<usize>,
    pub xs: Vec<f64>,
    pub replicates: u64,
    /// Frozen constant, fitted by a calibration run with `calibration_seed`.
    pub c0: f64,
    pub calibration_seed: u64,
    pub calibration_replicates: u64,
    pub calibration_margin: f64,
    /// Spherical exit angles compared with `nu_k`.
    pub sphere_samples: u64,
    pub sphere_r0: f64,
    pub sphere_step: StepPolicy,
}

impl Default for WassersteinConfig {
    fn default() -> Self {
        Self {
            ratio: (-1.0f64).exp(),
            ns: vec![100, 1000, 10_000],
            xs: vec![1.0, 1.5, 2.0],
            replicates: 10_000,
            c0: C0_FROZEN,
            calibration_seed: 0x00c0_ffee,
            calibration_replicates: 2_000,
            calibration_margin: 1.1,
            sphere_samples: 2_000,
            sphere_r0: 1.0,
            sphere_step: StepPolicy { dt_max: 1e-4, refine_factor: 5.0, shell: 1e-4, budget: 2_000_000_000 },
        }
    }
}

/// `c0` fitted by [`crate::experiments::calibrate_c0`] with the default
/// calibration seed, replicates, grid and margin.
pub const C0_FROZEN: f64 = 2.630_129_481_467_92;

/// Resolved output directory.
pub fn out_dir(config: &ExperimentConfig, cli: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf).or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_unknown_keys_fail() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        assert!(ExperimentConfig::from_json(r#"{"sed": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"cover": {"eps": [0.1], "trails": 3}}"#).is_err());
        let partial = ExperimentConfig::from_json(r#"{"seed": 9, "plane": {"radii": [1.0]}}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.plane.radii, vec![1.0]);
        assert_eq!(partial.plane.r0, 0.5);
    }

    #[test]
    fn fast_mode_scales_counts() {
        let mut c = ExperimentConfig { fast_mode: true, ..Default::default() };
        assert_eq!(c.count(10_000, 20, 100), 500);
        assert_eq!(c.count(50, 20, 5), 5);
        c.trials = Some(7);
        assert_eq!(c.count(10_000, 20, 100), 7);
    }
}
