// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod bm_sim;
pub mod error;
pub mod excursions;
pub mod experiments;
pub mod geometry;
pub mod gw;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
