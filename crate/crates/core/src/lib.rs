//! Channel knowledge map (CKM) construction and CKM-driven multi-UAV placement.
//!
//! The crate synthesizes ground-truth channel maps over a building layout,
//! rebuilds them from sparse measurements with ordinary Kriging, and places
//! UAV relays by maximizing the weighted uplink sum rate with a
//! derivative-free trust-region method.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dfo;
pub mod error;
pub mod experiments;
pub mod geostat;
pub mod grid;
pub mod io;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod truth;
pub mod units;

pub use error::{Error, Result};
pub use grid::{ChannelSample, GainGrid, GridSpec, Position2D, Rect};
pub use radio::{LookupMode, PlacementVector, SumRateEvaluator};
pub use rng::SeededRng;
pub use scenario::Scenario;
