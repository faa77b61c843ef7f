//! Ready-made moment problems: sensor arrays, two-dimensional covariance
//! samples, partial traces and state covariances, plus synthetic densities.

pub mod array;
pub mod density;
pub mod examples;
pub mod grid2d;
pub mod quantum;
pub mod statecov;

pub use array::{array_necessary_matrix, nonequispaced_array_problem, ArraySpec};
pub use density::{synth_density, DensitySpec};
pub use grid2d::grid2d_problem;
pub use quantum::{bell_state, partial_trace_problem};
pub use statecov::{
    feedback_spectral_factor, herglotz_boundary, herglotz_interpolant, state_cov_problem, validate_state_covariance,
    StateSpaceModel,
};
