//! Real orthonormal coordinates for the range space of the moment operator.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::operator::grid::SupportGrid;
use crate::operator::kernels::KernelSamples;
use crate::scalar::{cx, ComplexMatrix, Real};

/// Relative singular-value threshold that defines the numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Orthonormal basis (under `Re trace(X*Y)`) of a real subspace of
/// `n_left × n_right` complex matrices.
#[derive(Clone, Debug)]
pub struct RangeBasis<T: Real> {
    n_left: usize,
    n_right: usize,
    elements: Vec<ComplexMatrix<T>>,
    singular_values: Vec<T>,
}

/// Basis of the real vector space of `m × m` Hermitian matrices: diagonal
/// units, then symmetric and antisymmetric off-diagonal pairs.
pub fn hermitian_units<T: Real>(m: usize) -> Vec<HermitianMatrix<T>> {
    let r = T::one() / T::of(2.0).sqrt();
    let mut out = Vec::with_capacity(m * m);
    for a in 0..m {
        let mut e = DMatrix::zeros(m, m);
        e[(a, a)] = cx(T::one(), T::zero());
        out.push(HermitianMatrix::from_raw(e));
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let mut s = DMatrix::zeros(m, m);
            s[(a, b)] = cx(r, T::zero());
            s[(b, a)] = cx(r, T::zero());
            out.push(HermitianMatrix::from_raw(s));
            let mut k = DMatrix::zeros(m, m);
            k[(a, b)] = cx(T::zero(), r);
            k[(b, a)] = cx(T::zero(), -r);
            out.push(HermitianMatrix::from_raw(k));
        }
    }
    out
}

fn flatten<T: Real>(x: &ComplexMatrix<T>, out: &mut [T]) {
    let (rows, cols) = x.shape();
    for r in 0..rows {
        for c in 0..cols {
            let z = x[(r, c)];
            out[2 * (r * cols + c)] = z.re;
            out[2 * (r * cols + c) + 1] = z.im;
        }
    }
}

fn unflatten<T: Real>(v: &[T], rows: usize, cols: usize) -> ComplexMatrix<T> {
    DMatrix::from_fn(rows, cols, |r, c| cx(v[2 * (r * cols + c)], v[2 * (r * cols + c) + 1]))
}

/// Orthonormalizes the column span of `gen` (real, flattened) by SVD.
fn orthonormal_span<T: Real>(gen: DMatrix<T>, rows: usize, cols: usize) -> Result<(Vec<ComplexMatrix<T>>, Vec<T>)> {
    if gen.ncols() == 0 {
        return Err(Error::invalid("no generators"));
    }
    let svd = SVD::try_new(gen, true, false, T::default_epsilon(), 10_000).ok_or(Error::Eigen)?;
    let u = svd.u.ok_or(Error::Eigen)?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = order.first().map(|&i| s[i]).unwrap_or(T::zero());
    if smax == T::zero() {
        return Ok((Vec::new(), Vec::new()));
    }
    let cutoff = T::threshold(RANK_THRESHOLD) * smax;
    let mut elements = Vec::new();
    let mut values = Vec::new();
    for &i in order.iter().filter(|&&i| s[i] > cutoff) {
        let mut col: DVector<T> = u.column(i).into_owned();
        // Sign convention: the largest-magnitude component is positive.
        let mut pivot = 0;
        for k in 0..col.len() {
            if col[k].abs() > col[pivot].abs() {
                pivot = k;
            }
        }
        if col[pivot] < T::zero() {
            col.neg_mut();
        }
        elements.push(unflatten(col.as_slice(), rows, cols));
        values.push(s[i]);
    }
    Ok((elements, values))
}

impl<T: Real> RangeBasis<T> {
    /// Orthonormal basis of `span{ w_j · G_left(θ_j) · H · G_right(θ_j) }`
    /// over all nodes and all Hermitian units `H`.
    pub fn compute(grid: &SupportGrid<T>, kernels: &KernelSamples<T>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::invalid("empty kernel list"));
        }
        if kernels.len() != grid.len() {
            return Err(Error::dim(format!(
                "{} kernel samples for {} nodes",
                kernels.len(),
                grid.len()
            )));
        }
        let (nl, nr, m) = (kernels.n_left(), kernels.n_right(), kernels.m());
        let units = hermitian_units::<T>(m);
        let rows = 2 * nl * nr;
        let mut gen = DMatrix::zeros(rows, grid.len() * units.len());
        let mut buf = vec![T::zero(); rows];
        let mut col = 0;
        for (j, &w) in grid.weights().iter().enumerate() {
            let gl = &kernels.left()[j];
            let gr = &kernels.right()[j];
            for h in &units {
                let x = (gl * h.as_matrix() * gr).map(|z| z.scale(w));
                flatten(&x, &mut buf);
                gen.column_mut(col).copy_from_slice(&buf);
                col += 1;
            }
        }
        let (elements, singular_values) = orthonormal_span(gen, nl, nr)?;
        if elements.is_empty() {
            return Err(Error::invalid("moment operator has a trivial range"));
        }
        Ok(Self {
            n_left: nl,
            n_right: nr,
            elements,
            singular_values,
        })
    }

    /// Orthonormal basis for the span of arbitrary elements of equal shape.
    pub fn from_elements(elements: &[ComplexMatrix<T>]) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::invalid("no elements"))?;
        let (nl, nr) = first.shape();
        let mut gen = DMatrix::zeros(2 * nl * nr, elements.len());
        let mut buf = vec![T::zero(); 2 * nl * nr];
        for (k, e) in elements.iter().enumerate() {
            if e.shape() != (nl, nr) {
                return Err(Error::dim("elements differ in shape"));
            }
            flatten(e, &mut buf);
            gen.column_mut(k).copy_from_slice(&buf);
        }
        let (elements, singular_values) = orthonormal_span(gen, nl, nr)?;
        Ok(Self {
            n_left: nl,
            n_right: nr,
            elements,
            singular_values,
        })
    }

    /// Real dimension `d`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_left, self.n_right)
    }

    pub fn elements(&self) -> &[ComplexMatrix<T>] {
        &self.elements
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    /// `Σ coords_i · E_i`.
    pub fn combine(&self, coords: &DVector<T>) -> ComplexMatrix<T> {
        let mut out = DMatrix::zeros(self.n_left, self.n_right);
        for (c, e) in coords.iter().zip(&self.elements) {
            out += e.map(|z| z.scale(*c));
        }
        out
    }

    /// Coordinates `⟨E_i, X⟩`.
    pub fn coords(&self, x: &ComplexMatrix<T>) -> DVector<T> {
        DVector::from_iterator(
            self.dim(),
            self.elements.iter().map(|e| crate::hermitian::inner_unchecked(e, x)),
        )
    }

    /// Largest principal-angle sine between this span and `other`'s.
    pub fn max_principal_angle_sine(&self, other: &Self) -> T {
        // ‖(I − P_other) E_i‖ for each orthonormal E_i bounds the angle sines.
        self.elements
            .iter()
            .map(|e| {
                let back = other.combine(&other.coords(e));
                crate::scalar::frobenius(&(e - back))
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}
