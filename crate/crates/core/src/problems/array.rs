//! Sensor arrays with non-equispaced elements on a line.
//!
//! A plane wave arriving at angle `θ ∈ [0, π]` reaches the sensor at `x_ℓ`
//! (in wavelengths) with phase `p·x_ℓ·cos θ`. The covariance of the array
//! output is `R = ∫ a(θ) ρ(θ) a(θ)* dθ` with `a_ℓ(θ) = e^{j p x_ℓ cos θ}`, so
//! entry `(a, b)` is the moment `R_k = ∫ e^{−j p k cos θ} ρ(θ) dθ` at the lag
//! `k = x_b − x_a`.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::operator::grid::{GridKind, SupportGrid};
use crate::operator::kernels::KernelSamples;
use crate::operator::MomentOperator;
use crate::scalar::{cx, expj, ComplexMatrix, Real};

/// Lags closer than this are treated as the same moment index.
pub const LAG_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ArraySpec<T: Real> {
    positions: Vec<T>,
    wavenumber: T,
    grid: SupportGrid<T>,
}

impl<T: Real> ArraySpec<T> {
    pub fn new(positions: Vec<T>, wavenumber: T, grid: SupportGrid<T>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("array needs at least one sensor"));
        }
        if positions[0] != T::zero() {
            return Err(Error::invalid("first sensor must sit at the origin"));
        }
        if positions.iter().any(|x| !x.is_finite()) || !(wavenumber.is_finite() && wavenumber > T::zero()) {
            return Err(Error::invalid("positions and wavenumber must be finite, wavenumber positive"));
        }
        for a in 0..positions.len() {
            for b in (a + 1)..positions.len() {
                if (positions[a] - positions[b]).abs() <= T::threshold(LAG_TOL) {
                    return Err(Error::invalid(format!("sensors {a} and {b} coincide")));
                }
            }
        }
        if grid.dimension() != 1 {
            return Err(Error::invalid("array problems live on a one-dimensional angle grid"));
        }
        Ok(Self {
            positions,
            wavenumber,
            grid,
        })
    }

    /// Sensors at `0, 1, 1 + √2` on `[0, π]` with unit wavenumber.
    pub fn default_on(grid: SupportGrid<T>) -> Result<Self> {
        Self::new(default_positions(), T::one(), grid)
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn wavenumber(&self) -> T {
        self.wavenumber
    }

    pub fn grid(&self) -> &SupportGrid<T> {
        &self.grid
    }

    /// Steering vector `a(θ)`.
    pub fn manifold(&self, theta: T) -> ComplexMatrix<T> {
        let c = self.wavenumber * theta.cos();
        DMatrix::from_iterator(self.positions.len(), 1, self.positions.iter().map(|&x| expj(x * c)))
    }
}

pub fn default_positions<T: Real>() -> Vec<T> {
    vec![T::zero(), T::one(), T::one() + T::of(2.0).sqrt()]
}

/// Angle grid on `[0, π]`.
pub fn angle_grid<T: Real>(panels: usize, order: usize) -> Result<SupportGrid<T>> {
    SupportGrid::build(GridKind::Interval1d, &[(T::zero(), T::pi())], panels, order)
}

fn is_default<T: Real>(positions: &[T]) -> bool {
    let d = default_positions::<T>();
    positions.len() == d.len()
        && positions
            .iter()
            .zip(&d)
            .all(|(a, b)| (*a - *b).abs() <= T::default_epsilon() * T::of(4.0))
}

/// Distinct non-negative lags `{0} ∪ {|x_a − x_b|}` in increasing order.
pub fn difference_set<T: Real>(positions: &[T]) -> Vec<T> {
    if is_default(positions) {
        let s = T::of(2.0).sqrt();
        return vec![T::zero(), T::one(), s, T::one() + s];
    }
    let mut lags = vec![T::zero()];
    for a in 0..positions.len() {
        for b in (a + 1)..positions.len() {
            lags.push((positions[a] - positions[b]).abs());
        }
    }
    lags.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    lags.dedup_by(|a, b| (*a - *b).abs() <= T::threshold(LAG_TOL));
    lags
}

/// Moment operator of the array: kernels `G_left = a(θ)`, `G_right = a(θ)*`,
/// scalar density.
pub fn nonequispaced_array_problem<T: Real>(spec: &ArraySpec<T>) -> Result<MomentOperator<T>> {
    let left: Vec<ComplexMatrix<T>> = spec.grid.thetas().map(|t| spec.manifold(t)).collect();
    MomentOperator::new(spec.grid.clone(), KernelSamples::symmetric(left)?)
}

/// Reads `(lag, R_lag)` pairs off an array covariance: the entry `(a, b)` of
/// the first sensor pair realizing each lag.
pub fn lag_moments<T: Real>(r: &ComplexMatrix<T>, positions: &[T]) -> Result<Vec<(T, Complex<T>)>> {
    let n = positions.len();
    if r.shape() != (n, n) {
        return Err(Error::dim(format!("covariance {:?} for {n} sensors", r.shape())));
    }
    let mut out = Vec::new();
    for lag in difference_set(positions) {
        'search: for a in 0..n {
            for b in 0..n {
                let k = positions[b] - positions[a];
                if k >= T::zero() && (k - lag).abs() <= T::threshold(1e-9) {
                    out.push((lag, r[(a, b)]));
                    break 'search;
                }
            }
        }
    }
    Ok(out)
}

/// The necessary-condition matrix for the default array together with its
/// verdict (minimum eigenvalue `≥ −1e-12·R₀`).
///
/// `moments` must contain the lags `0, 1, √2, 1 + √2`, matched to within
/// `1e-9`.
pub fn array_necessary_matrix<T: Real>(moments: &[(T, Complex<T>)]) -> Result<(HermitianMatrix<T>, bool)> {
    let s = T::of(2.0).sqrt();
    let find = |lag: T| {
        moments
            .iter()
            .find(|(k, _)| (*k - lag).abs() <= T::threshold(1e-9))
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::invalid(format!("moment at lag {lag:?} missing")))
    };
    let r0 = find(T::zero())?.re;
    let r1 = find(T::one())?;
    let rs = find(s)?;
    let rt = find(T::one() + s)?;
    let c = |z: Complex<T>| z.conj();
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            cx(r0, T::zero()),
            r1,
            rt,
            c(r1),
            cx(r0, T::zero()),
            rs,
            c(rt),
            c(rs),
            cx(r0, T::zero()),
        ],
    );
    let h = HermitianMatrix::from_raw(m);
    let verdict = h.min_eigenvalue()? >= -T::of(1e-12) * r0.abs();
    Ok((h, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::MatrixDensity;
    use std::f64::consts::PI;

    #[test]
    fn default_lags() {
        let lags = difference_set::<f64>(&default_positions());
        assert_eq!(lags, vec![0.0, 1.0, 2f64.sqrt(), 1.0 + 2f64.sqrt()]);
        assert_eq!(difference_set(&[0.0, 1.0, 2.0]), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_positions() {
        let g = angle_grid::<f64>(4, 4).unwrap();
        assert!(ArraySpec::new(vec![0.5, 1.0], 1.0, g.clone()).is_err());
        assert!(ArraySpec::new(vec![0.0, 1.0, 1.0], 1.0, g).is_err());
    }

    #[test]
    fn uniform_density_moments() {
        let spec = ArraySpec::default_on(angle_grid::<f64>(32, 8).unwrap()).unwrap();
        let op = nonequispaced_array_problem(&spec).unwrap();
        assert_eq!(op.range_dim(), 7);
        let rho = MatrixDensity::constant(op.nodes(), HermitianMatrix::scalar(1, 1.0 / PI));
        let r = op.apply(&rho).unwrap();
        let lags = lag_moments(&r, spec.positions()).unwrap();
        assert!((lags[0].1.re - 1.0).abs() < 1e-14);
        assert!((lags[1].1.re - 0.7651976865579665).abs() < 1e-13);
        assert!(lags[1].1.im.abs() < 1e-14);
        let (_, ok) = array_necessary_matrix(&lags).unwrap();
        assert!(ok);
    }

    #[test]
    fn necessary_matrix_verdicts() {
        let s = 2f64.sqrt();
        let lags = |r0: f64, v: f64| vec![(0.0, cx(r0, 0.0)), (1.0, cx(v, 0.0)), (s, cx(v, 0.0)), (1.0 + s, cx(v, 0.0))];
        let (m, ok) = array_necessary_matrix(&lags(1.0, 0.0)).unwrap();
        assert!(ok);
        assert!(crate::scalar::frobenius(&(m.as_matrix() - DMatrix::identity(3, 3))) == 0.0);
        assert!(!array_necessary_matrix(&lags(1.0, 1.2)).unwrap().1);
        assert!(array_necessary_matrix(&lags(1.0, 0.0)[..3]).is_err());
    }
}
