//! Derivative-free trust-region maximization of a black-box objective over a
//! box, driven by quadratic interpolation models.

mod optimizer;
mod surrogate;
mod trs;

pub use optimizer::{
    init_interpolation_set, optimize, optimize_with_set, DfoConfig, InterpolationSet, IterationRecord, OptTrace,
    Termination, MAX_RESAMPLE_ATTEMPTS,
};
pub use surrogate::{
    fit_surrogate, interpolation_condition, is_nondegenerate, num_set_points, QuadraticSurrogate, MAX_CONDITION,
    RESIDUAL_TOL,
};
pub use trs::{solve_trust_region_subproblem, BoxBounds, RANDOM_STARTS};
