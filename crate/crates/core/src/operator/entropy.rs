//! Entropy functionals of grid-sampled densities.

use crate::error::{Error, Result};
use crate::hermitian::{matrix_log, EigDecomposition};
use crate::operator::grid::SupportGrid;
use crate::operator::MatrixDensity;
use crate::scalar::Real;

/// Which functional to evaluate.
#[derive(Clone, Copy, Debug)]
pub enum EntropyKind<'a, T: Real> {
    /// `S(I‖ρ) = −∫ trace log ρ`.
    Burg,
    /// `S(ρ‖I) = ∫ trace(ρ log ρ)`.
    VonNeumann,
    /// `S(ρ‖σ) = ∫ trace(ρ log ρ − ρ log σ)`.
    Relative(&'a MatrixDensity<T>),
}

fn positive_eig<T: Real>(rho: &MatrixDensity<T>, j: usize) -> Result<EigDecomposition<T>> {
    let eig = rho.samples()[j].eigh()?;
    if !(eig.min() > T::zero()) {
        return Err(Error::Positivity {
            eigenvalue: eig.min().as_f64(),
            node: Some(j),
        });
    }
    Ok(eig)
}

/// Quadrature value of the chosen entropy functional.
pub fn entropy<T: Real>(rho: &MatrixDensity<T>, grid: &SupportGrid<T>, kind: EntropyKind<'_, T>) -> Result<T> {
    if rho.len() != grid.len() {
        return Err(Error::dim(format!("{} samples on a {}-node grid", rho.len(), grid.len())));
    }
    if let EntropyKind::Relative(sigma) = kind {
        if sigma.len() != rho.len() || sigma.m() != rho.m() {
            return Err(Error::dim("reference density does not match"));
        }
    }
    let mut total = T::zero();
    for (j, &w) in grid.weights().iter().enumerate() {
        let eig = positive_eig(rho, j)?;
        let value = match kind {
            EntropyKind::Burg => -eig.values.iter().fold(T::zero(), |a, &v| a + v.ln()),
            EntropyKind::VonNeumann => eig.values.iter().fold(T::zero(), |a, &v| a + v * v.ln()),
            EntropyKind::Relative(sigma) => {
                let own = eig.values.iter().fold(T::zero(), |a, &v| a + v * v.ln());
                let log_sigma = matrix_log(&sigma.samples()[j]).map_err(|e| match e {
                    Error::Positivity { eigenvalue, .. } => Error::Positivity {
                        eigenvalue,
                        node: Some(j),
                    },
                    other => other,
                })?;
                own - rho.samples()[j].trace_product(&log_sigma)
            }
        };
        total += w * value;
    }
    Ok(total)
}
