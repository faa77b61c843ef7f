//! The moment operator `L(ρ) = ∫ G_left(θ) ρ(θ) G_right(θ) dθ`, its adjoint,
//! and the geometry of its range space.
//!
//! Integrals are quadrature sums over a [`SupportGrid`]; densities are
//! sampled at the grid nodes. The range space is coordinatized by an
//! orthonormal [`RangeBasis`], and dual variables are stored by their
//! coordinates in that basis.
//!
//! Per-node work runs in parallel; every reduction is accumulated in node
//! order so results do not depend on the thread count.

pub mod entropy;
pub mod grid;
pub mod kernels;
pub mod range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermitian::{inner_unchecked, HermitianMatrix};
use crate::scalar::{frobenius, ComplexMatrix, Real};

pub use entropy::{entropy, EntropyKind};
pub use grid::{gauss_legendre, GridKind, SupportGrid};
pub use kernels::KernelSamples;
pub use range::{hermitian_units, RangeBasis};

/// Grid-sampled Hermitian matrix function.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixDensity<T: Real> {
    samples: Vec<HermitianMatrix<T>>,
}

impl<T: Real> MatrixDensity<T> {
    pub fn new(samples: Vec<HermitianMatrix<T>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::invalid("density needs at least one sample"))?;
        let m = first.dim();
        if samples.iter().any(|s| s.dim() != m) {
            return Err(Error::dim("density samples differ in size"));
        }
        Ok(Self { samples })
    }

    /// The same matrix at every one of `nodes` nodes.
    pub fn constant(nodes: usize, value: HermitianMatrix<T>) -> Self {
        Self {
            samples: vec![value; nodes],
        }
    }

    pub fn from_fn(nodes: usize, f: impl FnMut(usize) -> HermitianMatrix<T>) -> Result<Self> {
        Self::new((0..nodes).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn m(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn samples(&self) -> &[HermitianMatrix<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<HermitianMatrix<T>> {
        self.samples
    }

    /// Smallest eigenvalue over all nodes, with the node where it occurs.
    pub fn min_eigenvalue(&self) -> Result<(T, usize)> {
        let mins: Vec<T> = self.samples.par_iter().map(|s| s.min_eigenvalue()).collect::<Result<_>>()?;
        let mut best = (mins[0], 0);
        for (j, &v) in mins.iter().enumerate() {
            if v < best.0 {
                best = (v, j);
            }
        }
        Ok(best)
    }

    /// Positive definite at every node (smallest eigenvalue above `floor`).
    pub fn is_positive(&self, floor: T) -> bool {
        self.min_eigenvalue().map(|(v, _)| v > floor).unwrap_or(false)
    }

    /// Largest Frobenius norm over the nodes.
    pub fn sup_norm(&self) -> T {
        self.samples.iter().fold(T::zero(), |a, s| a.max(s.norm()))
    }

    /// `max_j ‖self_j − other_j‖`.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(T::zero(), |a, (x, y)| a.max(x.sub(y).norm())))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a.sub(b)).collect(),
        })
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s.scale(a)).collect(),
        }
    }

    /// `Σ_j w_j trace(self_j · other_j)`.
    pub fn weighted_inner(&self, other: &Self, weights: &[T]) -> Result<T> {
        self.check_same_shape(other)?;
        if weights.len() != self.len() {
            return Err(Error::dim("weight count differs from sample count"));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .zip(weights)
            .fold(T::zero(), |acc, ((a, b), &w)| acc + w * a.trace_product(b)))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() || self.m() != other.m() {
            return Err(Error::dim(format!(
                "densities {}x{} vs {}x{}",
                self.len(),
                self.m(),
                other.len(),
                other.m()
            )));
        }
        Ok(())
    }
}

/// A dual variable `λ` in the range space, by coordinates and as a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVariable<T: Real> {
    coords: DVector<T>,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DualVariable<T> {
    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// `‖λ‖ = √⟨λ, λ⟩`, equal to the Euclidean norm of the coordinates.
    pub fn norm(&self) -> T {
        self.coords.norm()
    }
}

/// The discretized moment operator together with its range geometry.
#[derive(Clone, Debug)]
pub struct MomentOperator<T: Real> {
    grid: SupportGrid<T>,
    kernels: KernelSamples<T>,
    basis: RangeBasis<T>,
    /// `basis_adjoints[j][i] = L*(E_i)(θ_j)`.
    basis_adjoints: Vec<Vec<HermitianMatrix<T>>>,
    /// `gram[(i, k)] = Σ_j w_j trace(L*(E_i)(θ_j) · L*(E_k)(θ_j))`.
    gram: DMatrix<T>,
}

fn adjoint_at<T: Real>(gl: &ComplexMatrix<T>, lambda: &ComplexMatrix<T>, gr: &ComplexMatrix<T>) -> HermitianMatrix<T> {
    HermitianMatrix::from_raw(gl.adjoint() * lambda * gr.adjoint())
}

impl<T: Real> MomentOperator<T> {
    pub fn new(grid: SupportGrid<T>, kernels: KernelSamples<T>) -> Result<Self> {
        let basis = RangeBasis::compute(&grid, &kernels)?;
        let basis_adjoints: Vec<Vec<HermitianMatrix<T>>> = (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let gl = &kernels.left()[j];
                let gr = &kernels.right()[j];
                basis.elements().iter().map(|e| adjoint_at(gl, e, gr)).collect()
            })
            .collect();
        let d = basis.dim();
        let mut gram = DMatrix::zeros(d, d);
        for (adj, &w) in basis_adjoints.iter().zip(grid.weights()) {
            for i in 0..d {
                for k in i..d {
                    gram[(i, k)] += w * adj[i].trace_product(&adj[k]);
                }
            }
        }
        for i in 0..d {
            for k in 0..i {
                gram[(i, k)] = gram[(k, i)];
            }
        }
        Ok(Self {
            grid,
            kernels,
            basis,
            basis_adjoints,
            gram,
        })
    }

    pub fn grid(&self) -> &SupportGrid<T> {
        &self.grid
    }

    pub fn kernels(&self) -> &KernelSamples<T> {
        &self.kernels
    }

    pub fn basis(&self) -> &RangeBasis<T> {
        &self.basis
    }

    /// Real dimension of the range space.
    pub fn range_dim(&self) -> usize {
        self.basis.dim()
    }

    /// Density size `m`.
    pub fn m(&self) -> usize {
        self.kernels.m()
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn moment_shape(&self) -> (usize, usize) {
        (self.kernels.n_left(), self.kernels.n_right())
    }

    /// `L*(E_i)(θ_j)` for every basis element `i` at node `j`.
    pub fn basis_adjoints(&self, node: usize) -> &[HermitianMatrix<T>] {
        &self.basis_adjoints[node]
    }

    /// Gram matrix of the adjoint images of the basis under the weighted
    /// trace inner product; equal to the coordinate matrix of `L ∘ L*`.
    pub fn adjoint_gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    fn check_density(&self, rho: &MatrixDensity<T>) -> Result<()> {
        if rho.len() != self.nodes() || rho.m() != self.m() {
            return Err(Error::dim(format!(
                "density has {} samples of size {}, operator expects {} of size {}",
                rho.len(),
                rho.m(),
                self.nodes(),
                self.m()
            )));
        }
        Ok(())
    }

    /// `R = Σ_j w_j · G_left(θ_j) · ρ(θ_j) · G_right(θ_j)`.
    pub fn apply(&self, rho: &MatrixDensity<T>) -> Result<ComplexMatrix<T>> {
        self.check_density(rho)?;
        let terms: Vec<ComplexMatrix<T>> = (0..self.nodes())
            .into_par_iter()
            .map(|j| {
                let w = self.grid.weights()[j];
                (&self.kernels.left()[j] * rho.samples()[j].as_matrix() * &self.kernels.right()[j]).map(|z| z.scale(w))
            })
            .collect();
        let (nl, nr) = self.moment_shape();
        Ok(terms.into_iter().fold(DMatrix::zeros(nl, nr), |acc, t| acc + t))
    }

    /// Coordinates `⟨E_i, L(ρ)⟩ = Σ_j w_j trace(L*(E_i)(θ_j) ρ(θ_j))`.
    pub fn moment_coords(&self, rho: &MatrixDensity<T>) -> Result<DVector<T>> {
        self.check_density(rho)?;
        let d = self.range_dim();
        let terms: Vec<DVector<T>> = (0..self.nodes())
            .into_par_iter()
            .map(|j| {
                let w = self.grid.weights()[j];
                DVector::from_iterator(
                    d,
                    self.basis_adjoints[j].iter().map(|a| w * a.trace_product(&rho.samples()[j])),
                )
            })
            .collect();
        Ok(terms.into_iter().fold(DVector::zeros(d), |acc, t| acc + t))
    }

    /// `L*(λ)(θ_j) = (G_left(θ_j)* · λ · G_right(θ_j)*)_Herm` for an arbitrary
    /// matrix `λ` of moment shape.
    pub fn adjoint_matrix(&self, lambda: &ComplexMatrix<T>) -> Result<MatrixDensity<T>> {
        if lambda.shape() != self.moment_shape() {
            return Err(Error::dim(format!(
                "dual {:?} vs moment shape {:?}",
                lambda.shape(),
                self.moment_shape()
            )));
        }
        let samples = (0..self.nodes())
            .into_par_iter()
            .map(|j| adjoint_at(&self.kernels.left()[j], lambda, &self.kernels.right()[j]))
            .collect();
        MatrixDensity::new(samples)
    }

    /// `L*(λ)` evaluated from the basis coordinates of `λ`.
    pub fn adjoint(&self, lambda: &DualVariable<T>) -> Result<MatrixDensity<T>> {
        self.adjoint_coords(lambda.coords())
    }

    /// `L*(Σ c_i E_i)` at every node.
    pub fn adjoint_coords(&self, coords: &DVector<T>) -> Result<MatrixDensity<T>> {
        if coords.len() != self.range_dim() {
            return Err(Error::dim(format!(
                "{} coordinates for range dimension {}",
                coords.len(),
                self.range_dim()
            )));
        }
        let m = self.m();
        let samples = self
            .basis_adjoints
            .par_iter()
            .map(|adj| {
                adj.iter()
                    .zip(coords.iter())
                    .fold(HermitianMatrix::zeros(m), |acc, (a, &c)| acc.add(&a.scale(c)))
            })
            .collect();
        MatrixDensity::new(samples)
    }

    /// The dual variable with the given basis coordinates.
    pub fn dual(&self, coords: DVector<T>) -> Result<DualVariable<T>> {
        if coords.len() != self.range_dim() {
            return Err(Error::dim(format!(
                "{} coordinates for range dimension {}",
                coords.len(),
                self.range_dim()
            )));
        }
        let matrix = self.basis.combine(&coords);
        Ok(DualVariable { coords, matrix })
    }

    /// Orthogonal projection of `R` onto the range: coordinates and the
    /// residual norm `‖R − Σ coords_i E_i‖`.
    pub fn project(&self, r: &ComplexMatrix<T>) -> Result<(DVector<T>, T)> {
        if r.shape() != self.moment_shape() {
            return Err(Error::dim(format!(
                "moment {:?} vs operator {:?}",
                r.shape(),
                self.moment_shape()
            )));
        }
        let coords = self.basis.coords(r);
        let residual = frobenius(&(r - self.basis.combine(&coords)));
        Ok((coords, residual))
    }

    /// Projects a matrix onto the range and wraps it as a dual variable.
    pub fn dual_from_matrix(&self, lambda: &ComplexMatrix<T>) -> Result<(DualVariable<T>, T)> {
        let (coords, residual) = self.project(lambda)?;
        Ok((self.dual(coords)?, residual))
    }

    /// Interior dual-cone test: `min_j min-eig L*(λ)(θ_j) > floor`. Returns
    /// the verdict and the minimum eigenvalue.
    pub fn is_dual_feasible(&self, lambda: &DualVariable<T>, floor: T) -> Result<(bool, T)> {
        let (min, _) = self.adjoint(lambda)?.min_eigenvalue()?;
        Ok((min > floor, min))
    }

    /// The functional `λ ↦ ⟨λ, R⟩`.
    pub fn functional_c(&self, r: &ComplexMatrix<T>, lambda: &DualVariable<T>) -> Result<T> {
        crate::hermitian::inner(lambda.matrix(), r)
    }

    /// Splits off the component of `μ` that `L` annihilates:
    /// `μ − L*(c)` with `(L L*) c = L(μ)`.
    pub fn null_space_component(&self, mu: &MatrixDensity<T>) -> Result<MatrixDensity<T>> {
        let b = self.moment_coords(mu)?;
        let c = self
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("adjoint Gram matrix is singular"))?
            .solve(&b);
        mu.sub(&self.adjoint_coords(&c)?)
    }

    /// Least-squares fit of `L*(λ) ≈ value · I_m` over the grid (normal
    /// equations in the range basis).
    pub fn fit_adjoint_to_identity(&self, value: T) -> Result<DVector<T>> {
        let d = self.range_dim();
        let mut b = DVector::zeros(d);
        for (adj, &w) in self.basis_adjoints.iter().zip(self.grid.weights()) {
            for i in 0..d {
                b[i] += w * value * adj[i].trace();
            }
        }
        self.gram
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&b))
            .ok_or_else(|| Error::invalid("adjoint Gram matrix is singular"))
    }

    /// `⟨λ, R⟩` for matrices of moment shape.
    pub fn pairing(&self, lambda: &ComplexMatrix<T>, r: &ComplexMatrix<T>) -> T {
        inner_unchecked(lambda, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cre, cx};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_op(nodes: usize, m: usize) -> MomentOperator<f64> {
        let grid = if nodes == 1 {
            SupportGrid::discrete(1).unwrap()
        } else {
            SupportGrid::build(GridKind::Interval1d, &[(0.0, 1.0)], nodes / 2, 2).unwrap()
        };
        let k = KernelSamples::symmetric(vec![DMatrix::identity(m, m); grid.len()]).unwrap();
        MomentOperator::new(grid, k).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, m: usize) -> HermitianMatrix<f64> {
        let a = DMatrix::from_fn(m, m, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::hermitian_part(&a).unwrap()
    }

    #[test]
    fn identity_kernel_single_node() {
        let op = identity_op(1, 2);
        assert_eq!(op.range_dim(), 4);
        let p = HermitianMatrix::from_real_rows(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let r = op.apply(&MatrixDensity::constant(1, p.clone())).unwrap();
        assert!(frobenius(&(r - p.as_matrix())) < 1e-15);

        let lam = HermitianMatrix::from_real_rows(2, &[1.0, -0.3, -0.3, 4.0]).unwrap();
        let (dual, res) = op.dual_from_matrix(lam.as_matrix()).unwrap();
        assert!(res < 1e-14);
        let back = op.adjoint(&dual).unwrap();
        assert!(back.samples()[0].sub(&lam).norm() < 1e-14);

        let (ok, min) = op
            .is_dual_feasible(&op.dual_from_matrix(&DMatrix::identity(2, 2)).unwrap().0, 0.0)
            .unwrap();
        assert!(ok && (min - 1.0).abs() < 1e-14);
        let neg = DMatrix::<num_complex::Complex<f64>>::identity(2, 2).map(|z| -z);
        let (ok, _) = op.is_dual_feasible(&op.dual_from_matrix(&neg).unwrap().0, 0.0).unwrap();
        assert!(!ok);
    }

    #[test]
    fn adjoint_identity_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = SupportGrid::build(GridKind::Interval1d, &[(0.0, 2.0)], 3, 3).unwrap();
        let left: Vec<_> = grid
            .nodes()
            .iter()
            .map(|p| DMatrix::from_fn(3, 2, |r, c| cx((p[0] * (r + 1) as f64).cos(), (p[0] * (c + 2) as f64).sin())))
            .collect();
        let right: Vec<_> = grid
            .nodes()
            .iter()
            .map(|p| DMatrix::from_fn(2, 2, |r, c| cx(1.0 + (p[0] * (r * 2 + c) as f64).sin(), 0.1 * r as f64)))
            .collect();
        let op = MomentOperator::new(grid.clone(), KernelSamples::new(left, right).unwrap()).unwrap();
        for _ in 0..5 {
            let rho = MatrixDensity::from_fn(grid.len(), |_| random_hermitian(&mut rng, 2)).unwrap();
            let coords = DVector::from_fn(op.range_dim(), |_, _| rng.random_range(-1.0..1.0));
            let lam = op.dual(coords).unwrap();
            let lhs = op.pairing(lam.matrix(), &op.apply(&rho).unwrap());
            let rhs = op.adjoint(&lam).unwrap().weighted_inner(&rho, grid.weights()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
            let direct = op.adjoint_matrix(lam.matrix()).unwrap();
            assert!(direct.sup_distance(&op.adjoint(&lam).unwrap()).unwrap() < 1e-12);

            let rho2 = MatrixDensity::from_fn(grid.len(), |_| random_hermitian(&mut rng, 2)).unwrap();
            let combo = rho.scale(2.0).add(&rho2.scale(-0.5)).unwrap();
            let lin = op.apply(&rho).unwrap() * cre(2.0) - op.apply(&rho2).unwrap() * cre(0.5);
            assert!(frobenius(&(op.apply(&combo).unwrap() - lin)) < 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let op = identity_op(4, 2);
        let e1 = op.basis().elements()[0].clone();
        let (c, res) = op.project(&e1).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14 && c.iter().skip(1).all(|v| v.abs() < 1e-14));
        assert!(res < 1e-14);

        // Skew-Hermitian matrices are orthogonal to the Hermitian range.
        let skew = DMatrix::from_row_slice(2, 2, &[cx(0.0, 1.0), cre(1.0), cre(-1.0), cx(0.0, 2.0)]);
        let (c, res) = op.project(&skew).unwrap();
        assert!(c.norm() < 1e-14);
        assert!((res - frobenius(&skew)).abs() < 1e-14);
    }

    #[test]
    fn functional_c_examples() {
        let op = identity_op(4, 2);
        let e1 = op.basis().elements()[0].clone();
        let lam = op.dual(DVector::from_fn(4, |i, _| if i == 0 { 1.0 } else { 0.0 })).unwrap();
        assert!((op.functional_c(&e1, &lam).unwrap() - 1.0).abs() < 1e-14);
        let zero = op.dual(DVector::zeros(4)).unwrap();
        assert_eq!(op.functional_c(&e1, &zero).unwrap(), 0.0);
    }

    #[test]
    fn null_space_component_is_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = SupportGrid::build(GridKind::Interval1d, &[(0.0, 1.0)], 4, 3).unwrap();
        let left: Vec<_> = grid
            .nodes()
            .iter()
            .map(|p| DMatrix::from_fn(2, 1, |r, _| cx((p[0] * r as f64).cos(), -(p[0] * r as f64).sin())))
            .collect();
        let op = MomentOperator::new(grid.clone(), KernelSamples::symmetric(left).unwrap()).unwrap();
        let mu = MatrixDensity::from_fn(grid.len(), |_| random_hermitian(&mut rng, 1)).unwrap();
        let null = op.null_space_component(&mu).unwrap();
        assert!(frobenius(&op.apply(&null).unwrap()) < 1e-12);
    }
}
