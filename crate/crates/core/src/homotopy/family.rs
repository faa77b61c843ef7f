//! Entropy-extremal density families and their linearizations.
//!
//! Each family maps a dual variable `λ` to a positive density through
//! `Λ(θ) = L*(λ)(θ)`:
//!
//! | family                 | density                           |
//! |------------------------|-----------------------------------|
//! | rational               | `Λ⁻¹`                             |
//! | exponential            | `e⁻¹ exp(−Λ)`                     |
//! | weighted rational      | `φ Λ⁻¹ φ*`                        |
//! | weighted exponential   | `e⁻¹ σ^½ exp(−Λ) σ^½`             |
//! | prior exponential      | `e⁻¹ exp(log σ − Λ)`              |
//!
//! The moment map is `h(λ) = L(density(λ))`. Its Jacobian in the range
//! basis is `J_ik = ⟨E_i, ∇h(E_k)⟩`, assembled node by node in the
//! eigenbasis of `Λ` (or of `log σ − Λ`), where the derivative of the
//! inverse and of the exponential act entrywise.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermitian::{exp_divided_difference, log_mean, matrix_log, matrix_sqrt, HermitianMatrix};
use crate::operator::{MatrixDensity, MomentOperator};
use crate::scalar::{ComplexMatrix, Real};

/// Nodes handled per parallel work item. Fixed so that the reduction order,
/// and hence every floating-point result, is independent of the thread count.
const CHUNK: usize = 32;

/// The density family a solve works in.
#[derive(Clone, Debug)]
pub enum Family<T: Real> {
    Rational,
    Exponential,
    /// `φ Λ⁻¹ φ*` with a per-node nonsingular factor `φ` (`σ = φφ*`).
    WeightedRational {
        phi: Vec<ComplexMatrix<T>>,
    },
    /// `e⁻¹ σ^½ exp(−Λ) σ^½`; stores `σ^½` per node.
    WeightedExponential {
        sigma_sqrt: Vec<HermitianMatrix<T>>,
    },
    /// `e⁻¹ exp(log σ − Λ)`; stores `log σ` per node.
    PriorExponential {
        log_sigma: Vec<HermitianMatrix<T>>,
    },
}

/// Sign-definiteness of the Jacobian expected for a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    Negative,
}

fn check_weight<T: Real>(sigma: &MatrixDensity<T>) -> Result<()> {
    let (min, node) = sigma.min_eigenvalue()?;
    if !(min > T::zero()) {
        return Err(Error::Positivity {
            eigenvalue: min.as_f64(),
            node: Some(node),
        });
    }
    Ok(())
}

impl<T: Real> Family<T> {
    /// Weighted rational family with `φ = σ^½`.
    pub fn weighted_rational(sigma: &MatrixDensity<T>) -> Result<Self> {
        check_weight(sigma)?;
        let phi = sigma
            .samples()
            .iter()
            .map(|s| matrix_sqrt(s).map(HermitianMatrix::into_matrix))
            .collect::<Result<_>>()?;
        Ok(Family::WeightedRational { phi })
    }

    /// Weighted rational family with an explicit (not necessarily Hermitian)
    /// factor `φ`, nonsingular at every node.
    pub fn weighted_rational_factor(phi: Vec<ComplexMatrix<T>>) -> Result<Self> {
        for (j, f) in phi.iter().enumerate() {
            if !f.is_square() {
                return Err(Error::dim(format!("weight factor at node {j} is not square")));
            }
            let svd = f.clone().svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smin > T::threshold(1e-12) * smax) {
                return Err(Error::invalid(format!("weight factor is singular at node {j}")));
            }
        }
        Ok(Family::WeightedRational { phi })
    }

    pub fn weighted_exponential(sigma: &MatrixDensity<T>) -> Result<Self> {
        check_weight(sigma)?;
        let sigma_sqrt = sigma.samples().iter().map(matrix_sqrt).collect::<Result<_>>()?;
        Ok(Family::WeightedExponential { sigma_sqrt })
    }

    pub fn prior_exponential(sigma: &MatrixDensity<T>) -> Result<Self> {
        check_weight(sigma)?;
        let log_sigma = sigma.samples().iter().map(matrix_log).collect::<Result<_>>()?;
        Ok(Family::PriorExponential { log_sigma })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Rational => "rational",
            Family::Exponential => "exponential",
            Family::WeightedRational { .. } => "weighted-rational",
            Family::WeightedExponential { .. } => "weighted-exponential",
            Family::PriorExponential { .. } => "prior-exponential",
        }
    }

    /// Rational kinds need `λ` in the interior of the dual cone.
    pub fn is_rational(&self) -> bool {
        matches!(self, Family::Rational | Family::WeightedRational { .. })
    }

    pub fn definiteness(&self) -> Definiteness {
        if self.is_rational() {
            Definiteness::Positive
        } else {
            Definiteness::Negative
        }
    }

    /// Whether the assembled Jacobian is symmetric for densities of size `m`.
    ///
    /// Weighted kinds are only symmetric in the scalar case: for `m > 1` the
    /// congruence by `φ` (or `σ^½`) does not commute with the trace pairing.
    pub fn has_symmetric_jacobian(&self, m: usize) -> bool {
        match self {
            Family::Rational | Family::Exponential | Family::PriorExponential { .. } => true,
            Family::WeightedRational { .. } | Family::WeightedExponential { .. } => m == 1,
        }
    }

    pub(crate) fn check_against(&self, op: &MomentOperator<T>) -> Result<()> {
        let (len, m) = match self {
            Family::Rational | Family::Exponential => return Ok(()),
            Family::WeightedRational { phi } => (phi.len(), phi[0].nrows()),
            Family::WeightedExponential { sigma_sqrt } => (sigma_sqrt.len(), sigma_sqrt[0].dim()),
            Family::PriorExponential { log_sigma } => (log_sigma.len(), log_sigma[0].dim()),
        };
        if len != op.nodes() || m != op.m() {
            return Err(Error::dim(format!(
                "weight density has {len} samples of size {m}, operator expects {} of size {}",
                op.nodes(),
                op.m()
            )));
        }
        Ok(())
    }
}

/// Why a family could not be evaluated at some `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum EvalFailure<T: Real> {
    /// `L*(λ)` is (numerically) not positive definite at `node`.
    Boundary { min_eig: T, node: usize },
    /// Overflow or other non-finite intermediate.
    NonFinite,
}

impl<T: Real> EvalFailure<T> {
    pub(crate) fn into_error(self) -> Error {
        match self {
            EvalFailure::Boundary { min_eig, node } => Error::Positivity {
                eigenvalue: min_eig.as_f64(),
                node: Some(node),
            },
            EvalFailure::NonFinite => Error::Eigen,
        }
    }
}

/// Family density, moment coordinates and (optionally) Jacobian at one `λ`.
#[derive(Clone, Debug)]
pub(crate) struct Evaluation<T: Real> {
    pub density: MatrixDensity<T>,
    /// Coordinates of `h(λ)` in the range basis.
    pub h: DVector<T>,
    pub jacobian: Option<DMatrix<T>>,
    /// Smallest eigenvalue of `L*(λ)` over the grid.
    pub min_eig: T,
}

struct ChunkResult<T: Real> {
    density: Vec<HermitianMatrix<T>>,
    h: DVector<T>,
    jacobian: Option<DMatrix<T>>,
    min_eig: (T, usize),
}

fn finite<T: Real>(m: &ComplexMatrix<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `Re Σ_ab X_ab · conj(Y_ab) · K_ab`.
fn weighted_pairing<T: Real>(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>, k: &DMatrix<T>) -> T {
    let mut acc = T::zero();
    for ((a, b), kk) in x.iter().zip(y.iter()).zip(k.iter()) {
        acc += (a.re * b.re + a.im * b.im) * *kk;
    }
    acc
}

/// Evaluates `family` at dual coordinates `coords`.
///
/// For rational kinds `L*(λ)` must exceed `pos_floor · mean-eigenvalue` at
/// every node.
pub(crate) fn evaluate<T: Real>(
    op: &MomentOperator<T>,
    family: &Family<T>,
    coords: &DVector<T>,
    want_jacobian: bool,
    pos_floor: T,
) -> Result<Result<Evaluation<T>, EvalFailure<T>>> {
    family.check_against(op)?;
    if coords.iter().any(|c| !c.is_finite()) {
        return Ok(Err(EvalFailure::NonFinite));
    }
    let lam = op.adjoint_coords(coords)?;
    let n = op.nodes();
    let m = op.m();
    let d = op.range_dim();
    let weights = op.grid().weights();

    let floor = if family.is_rational() {
        let mean = lam.samples().iter().fold(T::zero(), |a, s| a + s.trace()) / T::of_usize(n * m);
        if !(mean > T::zero()) {
            return Ok(Err(EvalFailure::Boundary { min_eig: mean, node: 0 }));
        }
        pos_floor * mean
    } else {
        T::zero()
    };

    let e_inv = (-T::one()).exp();
    let chunks: Vec<std::result::Result<ChunkResult<T>, EvalFailure<T>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut out = ChunkResult {
                density: Vec::with_capacity(hi - lo),
                h: DVector::zeros(d),
                jacobian: want_jacobian.then(|| DMatrix::zeros(d, d)),
                min_eig: (T::max_value().unwrap_or(T::one()), lo),
            };
            for j in lo..hi {
                let lam_j = &lam.samples()[j];
                let eig = lam_j.eigh().map_err(|_| EvalFailure::NonFinite)?;
                if eig.min() < out.min_eig.0 {
                    out.min_eig = (eig.min(), j);
                }
                // Eigenbasis and entrywise derivative kernel of the node map.
                let (basis, kernel, rho) = match family {
                    Family::Rational | Family::WeightedRational { .. } => {
                        if !(eig.min() > floor) {
                            return Err(EvalFailure::Boundary {
                                min_eig: eig.min(),
                                node: j,
                            });
                        }
                        let inv = eig.map(|w| T::one() / w);
                        let kernel = DMatrix::from_fn(m, m, |a, b| T::one() / (eig.values[a] * eig.values[b]));
                        let rho = match family {
                            Family::WeightedRational { phi } => inv.congruence(&phi[j]).map_err(|_| EvalFailure::NonFinite)?,
                            _ => inv,
                        };
                        (eig, kernel, rho)
                    }
                    Family::Exponential | Family::WeightedExponential { .. } => {
                        let shifted: Vec<T> = eig.values.iter().map(|&w| -w - T::one()).collect();
                        let kernel = DMatrix::from_fn(m, m, |a, b| -exp_divided_difference(shifted[a], shifted[b]));
                        let base = eig.map(|w| (-w).exp() * e_inv);
                        let rho = match family {
                            Family::WeightedExponential { sigma_sqrt } => base
                                .congruence(sigma_sqrt[j].as_matrix())
                                .map_err(|_| EvalFailure::NonFinite)?,
                            _ => base,
                        };
                        (eig, kernel, rho)
                    }
                    Family::PriorExponential { log_sigma } => {
                        let y = log_sigma[j].sub(lam_j);
                        let ey = y.eigh().map_err(|_| EvalFailure::NonFinite)?;
                        let vals: Vec<T> = ey.values.iter().map(|&w| (w - T::one()).exp()).collect();
                        let kernel = DMatrix::from_fn(m, m, |a, b| -log_mean(vals[a], vals[b]));
                        let rho = ey.map(|w| (w - T::one()).exp());
                        (ey, kernel, rho)
                    }
                };
                if !finite(rho.as_matrix()) || kernel.iter().any(|k| !k.is_finite()) {
                    return Err(EvalFailure::NonFinite);
                }
                let w = weights[j];
                let adj = op.basis_adjoints(j);
                for (i, a) in adj.iter().enumerate() {
                    out.h[i] += w * a.trace_product(&rho);
                }
                if let Some(jac) = out.jacobian.as_mut() {
                    let outer: Option<&ComplexMatrix<T>> = match family {
                        Family::WeightedRational { phi } => Some(&phi[j]),
                        Family::WeightedExponential { sigma_sqrt } => Some(sigma_sqrt[j].as_matrix()),
                        _ => None,
                    };
                    let rotated: Vec<ComplexMatrix<T>> = adj.iter().map(|a| basis.to_eigenbasis(a.as_matrix())).collect();
                    match outer {
                        None => {
                            for i in 0..d {
                                for k in i..d {
                                    jac[(i, k)] += w * weighted_pairing(&rotated[i], &rotated[k], &kernel);
                                }
                            }
                        }
                        Some(p) => {
                            let pulled: Vec<ComplexMatrix<T>> = adj
                                .iter()
                                .map(|a| basis.to_eigenbasis(&(p.adjoint() * a.as_matrix() * p)))
                                .collect();
                            for i in 0..d {
                                for k in 0..d {
                                    jac[(i, k)] += w * weighted_pairing(&pulled[i], &rotated[k], &kernel);
                                }
                            }
                        }
                    }
                }
                out.density.push(rho);
            }
            Ok(out)
        })
        .collect();

    let mut density = Vec::with_capacity(n);
    let mut h = DVector::zeros(d);
    let mut jacobian = want_jacobian.then(|| DMatrix::zeros(d, d));
    let mut min_eig = T::max_value().unwrap_or(T::one());
    for chunk in chunks {
        let chunk = match chunk {
            Ok(c) => c,
            Err(f) => return Ok(Err(f)),
        };
        density.extend(chunk.density);
        h += chunk.h;
        if let (Some(acc), Some(part)) = (jacobian.as_mut(), chunk.jacobian) {
            *acc += part;
        }
        min_eig = min_eig.min(chunk.min_eig.0);
    }
    if let Some(jac) = jacobian.as_mut() {
        // Unweighted kinds only filled the upper triangle.
        if !matches!(family, Family::WeightedRational { .. } | Family::WeightedExponential { .. }) {
            for i in 0..d {
                for k in 0..i {
                    jac[(i, k)] = jac[(k, i)];
                }
            }
        }
        if jac.iter().any(|v| !v.is_finite()) {
            return Ok(Err(EvalFailure::NonFinite));
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Ok(Err(EvalFailure::NonFinite));
    }
    Ok(Ok(Evaluation {
        density: MatrixDensity::new(density)?,
        h,
        jacobian,
        min_eig,
    }))
}
