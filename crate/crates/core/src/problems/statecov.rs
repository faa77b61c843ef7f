//! State covariances of stable input-to-state filters, their admissibility
//! tests, the Herglotz interpolant and spectral factors under feedback.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::operator::grid::{GridKind, SupportGrid};
use crate::operator::kernels::KernelSamples;
use crate::operator::range::RANK_THRESHOLD;
use crate::operator::{DualVariable, MatrixDensity, MomentOperator};
use crate::scalar::{cre, cx, expj, frobenius, ComplexMatrix, Real};

/// Margin required inside the unit disk.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// `x_{k+1} = A x_k + B u_k`, optionally closed by `u = −C_o x + v`.
#[derive(Clone, Debug)]
pub struct StateSpaceModel<T: Real> {
    a: ComplexMatrix<T>,
    b: ComplexMatrix<T>,
    c_o: Option<ComplexMatrix<T>>,
}

/// Largest eigenvalue modulus, from the complex Schur form.
pub fn spectral_radius<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::dim("spectral radius of a non-square matrix"));
    }
    let schur = Schur::try_new(a.clone(), T::default_epsilon(), 10_000).ok_or(Error::Eigen)?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows())
        .map(|i| t[(i, i)].norm_sqr().sqrt())
        .fold(T::zero(), |a, b| a.max(b)))
}

/// Numerical rank at `1e-10 · σ_max`.
pub fn numerical_rank<T: Real>(m: &ComplexMatrix<T>) -> usize {
    let s = SVD::new(m.clone(), false, false).singular_values;
    let smax = s.max();
    if smax == T::zero() {
        return 0;
    }
    s.iter().filter(|&&v| v > T::threshold(RANK_THRESHOLD) * smax).count()
}

impl<T: Real> StateSpaceModel<T> {
    pub fn new(a: ComplexMatrix<T>, b: ComplexMatrix<T>, c_o: Option<ComplexMatrix<T>>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || n == 0 {
            return Err(Error::dim("A must be square and non-empty"));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::dim(format!("B is {:?}, expected {n} rows", b.shape())));
        }
        let limit = T::one() - T::of(STABILITY_MARGIN);
        let rho = spectral_radius(&a)?;
        if !(rho < limit) {
            return Err(Error::invalid(format!("A is not stable: spectral radius {rho:?}")));
        }
        let mut blocks = b.clone();
        let mut power = b.clone();
        for _ in 1..n {
            power = &a * power;
            let cols = blocks.ncols();
            blocks = blocks.insert_columns(cols, power.ncols(), cre(T::zero()));
            blocks.columns_mut(cols, power.ncols()).copy_from(&power);
        }
        if numerical_rank(&blocks) != n {
            return Err(Error::invalid("(A, B) is not controllable"));
        }
        if let Some(c) = &c_o {
            if c.shape() != (b.ncols(), n) {
                return Err(Error::dim(format!("C_o is {:?}, expected ({}, {n})", c.shape(), b.ncols())));
            }
            let closed = &a - &b * c;
            let rho = spectral_radius(&closed)?;
            if !(rho < limit) {
                return Err(Error::invalid(format!("A − B·C_o is not stable: spectral radius {rho:?}")));
            }
        }
        Ok(Self { a, b, c_o })
    }

    pub fn scalar(a: T, b: T, c_o: Option<T>) -> Result<Self> {
        let one = |v: T| DMatrix::from_element(1, 1, cre(v));
        Self::new(one(a), one(b), c_o.map(one))
    }

    pub fn a(&self) -> &ComplexMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix<T> {
        &self.b
    }

    pub fn c_o(&self) -> Option<&ComplexMatrix<T>> {
        self.c_o.as_ref()
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// `(I − z·M)⁻¹ B`.
    fn resolvent(&self, m: &ComplexMatrix<T>, z: Complex<T>) -> Result<ComplexMatrix<T>> {
        let n = self.states();
        let lhs = DMatrix::identity(n, n) - m.map(|v| v * z);
        lhs.lu().solve(&self.b).ok_or_else(|| Error::invalid("resolvent is singular"))
    }

    /// `G(e^{jθ}) = (I − e^{jθ} A)⁻¹ B`.
    pub fn transfer(&self, theta: T) -> Result<ComplexMatrix<T>> {
        self.resolvent(&self.a, expj(theta))
    }

    /// `φ(e^{jθ}) = I + C_o e^{jθ} (I − e^{jθ} A)⁻¹ B`.
    pub fn feedback_factor(&self, theta: T) -> Result<ComplexMatrix<T>> {
        let c = self
            .c_o
            .as_ref()
            .ok_or_else(|| Error::invalid("model has no feedback gain"))?;
        let z = expj(theta);
        Ok(DMatrix::identity(self.inputs(), self.inputs()) + (c * self.transfer(theta)?).map(|v| v * z))
    }

    /// `φ` sampled at the grid nodes.
    pub fn feedback_factor_samples(&self, grid: &SupportGrid<T>) -> Result<Vec<ComplexMatrix<T>>> {
        grid.thetas().map(|t| self.feedback_factor(t)).collect()
    }
}

/// Grid on `[−π, π]` whose weights carry the `1/2π` normalization.
pub fn circle_grid<T: Real>(panels: usize, order: usize) -> Result<SupportGrid<T>> {
    SupportGrid::build(GridKind::Interval1d, &[(-T::pi(), T::pi())], panels, order)?.scaled(T::one() / T::two_pi())
}

/// `R = ∫ G ρ G* dθ/2π` with `G(θ) = (I − e^{jθ}A)⁻¹B`; `grid` should come from
/// [`circle_grid`].
pub fn state_cov_problem<T: Real>(model: &StateSpaceModel<T>, grid: SupportGrid<T>) -> Result<MomentOperator<T>> {
    if grid.dimension() != 1 {
        return Err(Error::invalid("state covariances need a grid on the circle"));
    }
    let left = grid.thetas().map(|t| model.transfer(t)).collect::<Result<Vec<_>>>()?;
    MomentOperator::new(grid, KernelSamples::symmetric(left)?)
}

#[derive(Clone, Debug)]
pub struct StateCovValidation<T: Real> {
    /// Rank of `[[R − ARA*, B], [B*, 0]]`.
    pub rank: usize,
    /// `rank == 2m`.
    pub rank_ok: bool,
    /// Minimum-norm least-squares solution of `BH + H*B* = R − ARA*`.
    pub h: ComplexMatrix<T>,
    /// `‖BH + H*B* − (R − ARA*)‖`.
    pub sylvester_residual: T,
}

/// Checks whether `R` can be the state covariance of `model` driven by some
/// stationary input.
pub fn validate_state_covariance<T: Real>(r: &ComplexMatrix<T>, model: &StateSpaceModel<T>) -> Result<StateCovValidation<T>> {
    let n = model.states();
    let m = model.inputs();
    if r.shape() != (n, n) {
        return Err(Error::dim(format!("R is {:?}, model has {n} states", r.shape())));
    }
    let a = model.a();
    let b = model.b();
    let q = r - a * r * a.adjoint();

    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&q);
    block.view_mut((0, n), (n, m)).copy_from(b);
    block.view_mut((n, 0), (m, n)).copy_from(&b.adjoint());
    let rank = numerical_rank(&block);

    // Real least squares over (Re H, Im H) with unknowns laid out row-major.
    let unknowns = 2 * m * n;
    let sylvester = |h: &ComplexMatrix<T>| b * h + h.adjoint() * b.adjoint();
    let flatten = |x: &ComplexMatrix<T>| DVector::from_iterator(2 * n * n, x.iter().flat_map(|z| [z.re, z.im]));
    let mut system = DMatrix::zeros(2 * n * n, unknowns);
    for k in 0..unknowns {
        let mut h = DMatrix::zeros(m, n);
        let (cell, imag) = (k / 2, k % 2 == 1);
        h[(cell / n, cell % n)] = if imag { cx(T::zero(), T::one()) } else { cre(T::one()) };
        system.set_column(k, &flatten(&sylvester(&h)));
    }
    let svd = SVD::new(system, true, true);
    let smax = svd.singular_values.max();
    let sol = svd
        .solve(&flatten(&q), T::threshold(RANK_THRESHOLD) * smax)
        .map_err(|e| Error::invalid(e.to_string()))?;
    let h = DMatrix::from_fn(m, n, |i, c| {
        let k = 2 * (i * n + c);
        cx(sol[k], sol[k + 1])
    });
    let sylvester_residual = frobenius(&(sylvester(&h) - &q));
    Ok(StateCovValidation {
        rank,
        rank_ok: rank == 2 * m,
        h,
        sylvester_residual,
    })
}

fn check_circle_density<T: Real>(rho: &MatrixDensity<T>, grid: &SupportGrid<T>) -> Result<()> {
    if grid.dimension() != 1 || rho.len() != grid.len() {
        return Err(Error::dim("density must be sampled on a one-dimensional circle grid"));
    }
    Ok(())
}

/// `F(z) = ∫ (1 + z e^{jθ}) / (1 − z e^{jθ}) ρ(θ) dθ/2π` for `|z| ≤ 1 − 1e-6`,
/// with the imaginary constant set to zero. The grid's own normalization is
/// divided out first, so plain and `1/2π`-scaled grids give the same value.
pub fn herglotz_interpolant<T: Real>(rho: &MatrixDensity<T>, grid: &SupportGrid<T>, z: Complex<T>) -> Result<ComplexMatrix<T>> {
    check_circle_density(rho, grid)?;
    if !(z.norm_sqr().sqrt() <= T::one() - T::of(1e-6)) {
        return Err(Error::invalid("z must lie inside the unit disk"));
    }
    let scale = T::one() / (grid.normalization() * T::two_pi());
    let m = rho.m();
    let mut f = DMatrix::zeros(m, m);
    for ((theta, &w), s) in grid.thetas().zip(grid.weights()).zip(rho.samples()) {
        let e = z * expj(theta);
        let kernel = (cre(T::one()) + e) / (cre(T::one()) - e);
        f += s.as_matrix().map(|v| v * kernel * (w * scale));
    }
    Ok(f)
}

/// Hermitian part of `F(r e^{−jθ})`, the Poisson integral of `ρ`; it tends to
/// `ρ(θ)` as `r → 1`. The kernel `(1 + z e^{jθ'})/(1 − z e^{jθ'})` peaks at
/// `θ' = −arg z`, hence the conjugate point.
pub fn herglotz_boundary<T: Real>(rho: &MatrixDensity<T>, grid: &SupportGrid<T>, theta: T, r: T) -> Result<HermitianMatrix<T>> {
    let z = cx(r * theta.cos(), -r * theta.sin());
    HermitianMatrix::hermitian_part(&herglotz_interpolant(rho, grid, z)?)
}

#[derive(Clone, Debug)]
pub struct FeedbackFactor<T: Real> {
    /// `G_o = (I − e^{jθ}(A − BC_o))⁻¹ B` per node.
    pub g_o: Vec<ComplexMatrix<T>>,
    /// Largest relative defect of `φ L*(λ)⁻¹ φ* = (G_o* λ G_o)⁻¹` over nodes.
    pub identity_residual: T,
    /// McMillan degree bound `2n` for the resulting spectrum.
    pub degree_bound: usize,
}

/// Spectral factors of the weighted rational density under state feedback.
///
/// `op` must be the state-covariance operator of `model` and `λ` dual
/// feasible for it.
pub fn feedback_spectral_factor<T: Real>(
    op: &MomentOperator<T>,
    model: &StateSpaceModel<T>,
    lambda: &DualVariable<T>,
) -> Result<FeedbackFactor<T>> {
    let c = model.c_o().ok_or_else(|| Error::invalid("model has no feedback gain"))?;
    let closed = model.a() - model.b() * c;
    let lam = lambda.matrix();
    let mut g_o = Vec::with_capacity(op.nodes());
    let mut residual = T::zero();
    for (j, theta) in op.grid().thetas().enumerate() {
        let z = expj(theta);
        let g = model.transfer(theta)?;
        let go = model.resolvent(&closed, z)?;
        let phi = model.feedback_factor(theta)?;
        let with_node = |e: Error| match e {
            Error::Positivity { eigenvalue, .. } => Error::Positivity {
                eigenvalue,
                node: Some(j),
            },
            other => other,
        };
        let inner = HermitianMatrix::hermitian_part(&(g.adjoint() * lam * &g))?;
        let lhs = crate::hermitian::inverse_positive(&inner)
            .map_err(with_node)?
            .congruence(&phi)?;
        let closed_inner = HermitianMatrix::hermitian_part(&(go.adjoint() * lam * &go))?;
        let rhs = crate::hermitian::inverse_positive(&closed_inner).map_err(with_node)?;
        residual = residual.max(lhs.sub(&rhs).norm() / rhs.norm());
        g_o.push(go);
    }
    Ok(FeedbackFactor {
        g_o,
        identity_residual: residual,
        degree_bound: 2 * model.states(),
    })
}
