//! Matricial moment problems solved by entropy-extremal homotopy.
//!
//! A moment operator `L(ρ) = ∫ G_left(θ) ρ(θ) G_right(θ) dθ` maps positive
//! matrix-valued densities to finitely many moments `R`. This crate
//! discretizes `L` by quadrature and recovers a positive density from `R`
//! by integrating a continuation ODE in the dual variable `λ`. The density is
//! either `L*(λ)⁻¹` (rational family) or `e⁻¹ exp(−L*(λ))` (exponential
//! family), optionally weighted by a prior. If `R` is not strictly feasible
//! the flow diverges, and the solver reports that as a status.
//!
//! All numerics are generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix `f64`.
//!
//! ```
//! use matmoment::{solve, Family, SolveConfig, SolveStatus};
//! use matmoment::problems::examples::example;
//!
//! let ex = example("scalar-demo", 0).unwrap();
//! let op = ex.problem.operator::<f64>().unwrap();
//! let r = ex.problem.moment_matrix().unwrap();
//! let report = solve(&op, &r, &Family::Rational, &SolveConfig::default()).unwrap();
//! assert_eq!(report.status, SolveStatus::Converged);
//! ```

// `!(x > floor)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hermitian;
pub mod homotopy;
pub mod io;
pub mod operator;
pub mod problems;
pub mod scalar;

pub use error::{Error, Result};
pub use hermitian::{EigDecomposition, HermitianMatrix};
pub use homotopy::{
    default_dual_start, family_density, h_map, jacobian, lyapunov_slope, solve, solve_from, solve_tau, solve_tau_from,
    Definiteness, Family, Jacobian, SolveConfig, SolveReport, SolveStatus, TracePoint,
};
pub use operator::entropy::{entropy, EntropyKind};
pub use operator::grid::{GridKind, SupportGrid};
pub use operator::kernels::KernelSamples;
pub use operator::range::RangeBasis;
pub use operator::{DualVariable, MatrixDensity, MomentOperator};
pub use scalar::{ComplexMatrix, Real};

/// `f64` instantiations.
pub type Hermitian64 = HermitianMatrix<f64>;
pub type Matrix64 = ComplexMatrix<f64>;
pub type Grid64 = SupportGrid<f64>;
pub type Density64 = MatrixDensity<f64>;
pub type Operator64 = MomentOperator<f64>;
pub type Dual64 = DualVariable<f64>;
pub type Family64 = Family<f64>;
pub type Config64 = SolveConfig<f64>;
pub type Report64 = SolveReport<f64>;
