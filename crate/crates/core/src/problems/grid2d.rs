//! Two-dimensional covariance samples `R_{k,ℓ} = ∫∫ e^{j(kθ + ℓφ)} ρ(θ, φ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::grid::{GridKind, SupportGrid};
use crate::operator::kernels::KernelSamples;
use crate::operator::MomentOperator;
use crate::scalar::{expj, ComplexMatrix, Real};

/// Tensor grid on `[0, π]²`.
pub fn square_grid<T: Real>(panels: usize, order: usize) -> Result<SupportGrid<T>> {
    SupportGrid::build(
        GridKind::Rectangle2d,
        &[(T::zero(), T::pi()), (T::zero(), T::pi())],
        panels,
        order,
    )
}

fn phases<T: Real>(n: usize, x: T) -> impl Iterator<Item = num_complex::Complex<T>> {
    (0..=n).map(move |k| expj(T::of_usize(k) * x))
}

/// Moment operator for lags `0 ≤ k, ℓ ≤ n`: `G_left = u(θ)` (a column) and
/// `G_right = v(φ)ᵀ` (a row), so `L(ρ)` is the `(n+1) × (n+1)` array of
/// samples. The kernels are not adjoint to each other.
pub fn grid2d_problem<T: Real>(n: usize, grid: SupportGrid<T>) -> Result<MomentOperator<T>> {
    if n == 0 {
        return Err(Error::invalid("grid2d needs n ≥ 1"));
    }
    if grid.dimension() != 2 {
        return Err(Error::invalid("grid2d needs a two-dimensional grid"));
    }
    let left: Vec<ComplexMatrix<T>> = grid
        .nodes()
        .iter()
        .map(|p| DMatrix::from_iterator(n + 1, 1, phases(n, p[0])))
        .collect();
    let right: Vec<ComplexMatrix<T>> = grid
        .nodes()
        .iter()
        .map(|p| DMatrix::from_iterator(1, n + 1, phases(n, p[1])))
        .collect();
    MomentOperator::new(grid, KernelSamples::new(left, right)?)
}
