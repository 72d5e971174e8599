//! Synthetic ground-truth channel maps: box buildings, LoS/NLoS log-distance
//! path loss and exponentially correlated shadowing, plus the measurement
//! sampling patterns used to feed map construction.

mod ckm;
mod field;
mod layout;
mod sampling;

pub use ckm::{generate_truth_ckm, truth_ckm_with_shadowing, LinkHeights, TruthParams};
pub use field::{gaussian_random_field, ShadowingSampler, MAX_FIELD_NODES};
pub use layout::{generate_layout, generate_layout_avoiding, los_blocked, Building, BuildingLayout, Point3};
pub use sampling::{sample_measurements, sample_random};
