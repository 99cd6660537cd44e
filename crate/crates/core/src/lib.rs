//! Choreographic periodic orbits of the n-body problem on the unit sphere
//! with the cotangent force function.
//!
//! The crate evaluates the discrete Lagrangian action of a single shared
//! loop `Q` traversed by all bodies with uniform phase lags, minimizes it
//! over loops with the figure-eight symmetries, and checks minimizers
//! against the equations of motion by direct integration.

// `!(x < y)` is used deliberately so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod choreography;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod minimizer;

pub use action::{
    action, action_difference, action_gradient, action_of_paths, action_via_paths, collision_bound, loop_accelerations,
    loop_velocities, velocity_identity_residual, ActionBreakdown, ActionGradient,
};
pub use choreography::{
    apply_e2, apply_e3, build_choreography, min_pair_separation, symmetrize, symmetrize_field, symmetry_residuals,
    test_loop, AxisSigns, BodySystem, DiscreteLoop, SymmetryElement,
};
pub use error::{Error, Result};
pub use geometry::{
    cot_bounds, cot_from_chordal, cot_pair, geodesic_distance, potential, potential_gradient, PairSeparation,
    TangentVector, UnitPoint, Vec3, COLLISION_EPS,
};
pub use integrator::{
    accelerations, closure_error, el_residual, el_residual_paths, energy, integrate, step_count, step_rk4, PhaseState,
    Trajectory,
};
pub use minimizer::{
    descent_step, minimize, perturb, MinimizeOptions, MinimizeReport, Perturbation, Termination, DEFAULT_SAMPLES,
};
