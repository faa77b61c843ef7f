//! Partial traces of bipartite density matrices as moment problems.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::operator::grid::SupportGrid;
use crate::operator::kernels::KernelSamples;
use crate::operator::MomentOperator;
use crate::scalar::{cre, ComplexMatrix, Real};

/// `trace_B` as a moment operator on a `d_B`-node index set: node `k` has
/// kernel `G_k = I_{d_A} ⊗ e_kᵀ`, so `Σ_k G_k ρ G_k* = trace_B(ρ)`.
pub fn partial_trace_problem<T: Real>(d_a: usize, d_b: usize) -> Result<MomentOperator<T>> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::invalid("subsystem dimensions must be positive"));
    }
    let left: Vec<ComplexMatrix<T>> = (0..d_b)
        .map(|k| {
            let mut g = DMatrix::zeros(d_a, d_a * d_b);
            for i in 0..d_a {
                g[(i, i * d_b + k)] = cre(T::one());
            }
            g
        })
        .collect();
    MomentOperator::new(SupportGrid::discrete(d_b)?, KernelSamples::symmetric(left)?)
}

/// `½ (|00⟩ + |11⟩)(⟨00| + ⟨11|)`.
pub fn bell_state<T: Real>() -> HermitianMatrix<T> {
    let h = T::of(0.5);
    let z = T::zero();
    HermitianMatrix::from_real_rows(4, &[h, z, z, h, z, z, z, z, z, z, z, z, h, z, z, h]).expect("symmetric")
}
