use crate::error::{Error, Result};
use crate::scalar::{frobenius, ComplexMatrix, Real};

/// Tolerance (relative) used to decide whether `G_right = G_left*` node-wise.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Integration kernels sampled at the grid nodes.
///
/// `left[j]` is `n_left × m`, `right[j]` is `m × n_right`.
#[derive(Clone, Debug)]
pub struct KernelSamples<T: Real> {
    n_left: usize,
    n_right: usize,
    m: usize,
    left: Vec<ComplexMatrix<T>>,
    right: Vec<ComplexMatrix<T>>,
    symmetric: bool,
}

impl<T: Real> KernelSamples<T> {
    pub fn new(left: Vec<ComplexMatrix<T>>, right: Vec<ComplexMatrix<T>>) -> Result<Self> {
        if left.is_empty() {
            return Err(Error::invalid("empty kernel list"));
        }
        if left.len() != right.len() {
            return Err(Error::dim(format!(
                "{} left vs {} right kernel samples",
                left.len(),
                right.len()
            )));
        }
        let (n_left, m) = left[0].shape();
        let n_right = right[0].ncols();
        for (j, (gl, gr)) in left.iter().zip(&right).enumerate() {
            if gl.shape() != (n_left, m) || gr.shape() != (m, n_right) {
                return Err(Error::dim(format!(
                    "node {j}: left {:?}, right {:?}, expected ({n_left}, {m}) and ({m}, {n_right})",
                    gl.shape(),
                    gr.shape()
                )));
            }
            if gl.iter().chain(gr.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::invalid(format!("non-finite kernel sample at node {j}")));
            }
        }
        let symmetric = n_left == n_right
            && left.iter().zip(&right).all(|(gl, gr)| {
                let scale = frobenius(gl).max(T::one());
                frobenius(&(gr - gl.adjoint())) <= T::threshold(SYMMETRY_TOL) * scale
            });
        Ok(Self {
            n_left,
            n_right,
            m,
            left,
            right,
            symmetric,
        })
    }

    /// Kernels with `G_right = G_left*`.
    pub fn symmetric(left: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let right = left.iter().map(|g| g.adjoint()).collect();
        Self::new(left, right)
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    /// Size of the density samples.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn left(&self) -> &[ComplexMatrix<T>] {
        &self.left
    }

    pub fn right(&self) -> &[ComplexMatrix<T>] {
        &self.right
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}
