//! Traversal counts, grid covers, local excursion cover times, excursion
//! clocks and cover-time detection.

pub mod cover;
pub mod grid;
pub mod tracker;
pub mod traversal;

pub use cover::{cover_time, CoverBounds, CoverConfig, CoverGrid, CoverRun, CoverTrial};
pub use grid::{build_grid_cover, ActiveSet, CubeIndex, GridCover};
pub use tracker::{local_excursion_cover, tau_x, track_centers, LocalCover, StopRule, TrackPolicy, WatchRadii};
pub use traversal::{
    count_traversals, count_traversals_many, counts_from_level, traversal_process, Sampler, TraversalQuery,
    TraversalRecord,
};
