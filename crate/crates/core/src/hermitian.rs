//! Dense Hermitian matrix calculus.
//!
//! Spectral functions (exponential, logarithm, square root, inverse) all go
//! through [`HermitianMatrix::eigh`], which symmetrizes its input and returns
//! eigenvalues in ascending order. The non-commutative ("scrambled")
//! multiplication
//!
//! ```text
//! M_C(Δ) = ∫₀¹ C^{1-τ} Δ C^τ dτ
//! ```
//!
//! and its inverse are evaluated in the eigenbasis of `C`, where they act
//! entrywise by the logarithmic mean `(c_i - c_j) / (log c_i - log c_j)` and its
//! reciprocal. They are the Fréchet derivatives of `exp` (at `log C`) and of
//! `log` respectively.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{all_finite, cre, frobenius, ComplexMatrix, Real};

/// Relative positivity floor used when none is given explicitly.
pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-12;

/// Relative Hermiticity defect accepted (and removed) on construction.
pub const HERMITIAN_DEFECT_TOL: f64 = 1e-12;

/// Below this distance from one, the logarithmic mean switches to its series.
const LOG_MEAN_SERIES_RADIUS: f64 = 1e-4;

/// A square complex matrix with `M = M*`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T: Real> {
    m: ComplexMatrix<T>,
}

/// Eigendecomposition `U · diag(w) · U*` with ascending `w`.
#[derive(Clone, Debug)]
pub struct EigDecomposition<T: Real> {
    pub values: DVector<T>,
    pub vectors: ComplexMatrix<T>,
}

fn symmetrize<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let half = T::of(0.5);
    (m + m.adjoint()).map(|z| z.scale(half))
}

impl<T: Real> HermitianMatrix<T> {
    /// Validates and symmetrizes `m`.
    ///
    /// The defect `‖M − M*‖/2` must not exceed `1e-12·‖M‖`; within that bound
    /// the matrix is replaced by its Hermitian part.
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dim(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.nrows() == 0 {
            return Err(Error::dim("empty matrix"));
        }
        if !all_finite(&m) {
            return Err(Error::invalid("non-finite matrix entry"));
        }
        let defect = frobenius(&(&m - m.adjoint())) * T::of(0.5);
        let scale = frobenius(&m);
        if defect > T::threshold(HERMITIAN_DEFECT_TOL) * scale {
            return Err(Error::NotHermitian(defect.as_f64()));
        }
        Ok(Self { m: symmetrize(&m) })
    }

    /// `(M + M*) / 2` for any square `M`.
    pub fn hermitian_part(m: &ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dim(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        Ok(Self { m: symmetrize(m) })
    }

    /// Symmetrizes without validation. Only for values that are Hermitian by
    /// construction up to rounding.
    pub(crate) fn from_raw(m: ComplexMatrix<T>) -> Self {
        debug_assert!(m.is_square());
        Self { m: symmetrize(&m) }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    /// `value · I_n`.
    pub fn scalar(n: usize, value: T) -> Self {
        Self {
            m: DMatrix::from_diagonal_element(n, n, cre(value)),
        }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            m: DMatrix::from_fn(n, n, |i, j| if i == j { cre(diag[i]) } else { cre(T::zero()) }),
        }
    }

    /// Builds a Hermitian matrix from real row-major entries (must be symmetric).
    pub fn from_real_rows(n: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::dim(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| cre(entries[i * n + j])))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.m
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.m[(i, i)].re)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        frobenius(&self.m)
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            m: self.m.map(|z| z.scale(a)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// `F · M · F*` for a (possibly rectangular) `F`.
    pub fn congruence(&self, f: &ComplexMatrix<T>) -> Result<Self> {
        if f.ncols() != self.dim() {
            return Err(Error::dim(format!(
                "congruence factor has {} columns, matrix has dim {}",
                f.ncols(),
                self.dim()
            )));
        }
        Ok(Self::from_raw(f * &self.m * f.adjoint()))
    }

    /// `Re trace(self · other)`.
    pub fn trace_product(&self, other: &Self) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                let a = self.m[(i, j)];
                let b = other.m[(j, i)];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    pub fn eigh(&self) -> Result<EigDecomposition<T>> {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(self.eigh()?.min())
    }
}

fn eigh<T: Real>(h: &HermitianMatrix<T>) -> Result<EigDecomposition<T>> {
    let n = h.dim();
    if !all_finite(&h.m) {
        return Err(Error::Eigen);
    }
    if n == 1 {
        return Ok(EigDecomposition {
            values: DVector::from_element(1, h.m[(0, 0)].re),
            vectors: DMatrix::identity(1, 1),
        });
    }
    let se = SymmetricEigen::try_new(h.m.clone(), T::default_epsilon(), 10_000).ok_or(Error::Eigen)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    if values.iter().any(|w| !w.is_finite()) {
        return Err(Error::Eigen);
    }
    Ok(EigDecomposition { values, vectors })
}

impl<T: Real> EigDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, w| acc.max(w.abs()))
    }

    /// `U · diag(f(w)) · U*`.
    pub fn map(&self, f: impl Fn(T) -> T) -> HermitianMatrix<T> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let s = f(self.values[c]);
            for r in 0..n {
                scaled[(r, c)] = scaled[(r, c)].scale(s);
            }
        }
        HermitianMatrix::from_raw(scaled * self.vectors.adjoint())
    }

    /// Fails unless the smallest eigenvalue exceeds `floor_rel · max|w|`.
    pub fn require_positive(&self, floor_rel: T) -> Result<T> {
        let min = self.min();
        let scale = self.max_abs();
        if !(min > floor_rel * scale) || scale == T::zero() {
            return Err(Error::Positivity {
                eigenvalue: min.as_f64(),
                node: None,
            });
        }
        Ok(min)
    }

    /// `U* · X · U`.
    pub fn to_eigenbasis(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        self.vectors.adjoint() * x * &self.vectors
    }

    /// `U · X · U*`.
    pub fn from_eigenbasis(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        &self.vectors * x * self.vectors.adjoint()
    }

    /// Multiplies `Δ` entrywise, in this eigenbasis, by `kernel(w_i, w_j)`.
    pub fn apply_kernel(&self, delta: &HermitianMatrix<T>, kernel: impl Fn(T, T) -> T) -> HermitianMatrix<T> {
        let mut x = self.to_eigenbasis(delta.as_matrix());
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] = x[(i, j)].scale(kernel(self.values[i], self.values[j]));
            }
        }
        HermitianMatrix::from_raw(self.from_eigenbasis(&x))
    }
}

/// Logarithmic mean `(a − b) / (log a − log b)` of two positive numbers, with
/// `L(a, a) = a`.
///
/// Evaluated as `b·f(a/b)`, `f(r) = (r − 1)/log r`, switching to
/// `1 + x/2 − x²/12` (`x = r − 1`) when `|x| < 1e-4`.
pub fn log_mean<T: Real>(a: T, b: T) -> T {
    let r = a / b;
    let x = r - T::one();
    if x.abs() < T::of(LOG_MEAN_SERIES_RADIUS) {
        b * (T::one() + x * T::of(0.5) - x * x / T::of(12.0))
    } else {
        b * x / r.ln()
    }
}

/// Divided difference of `exp`: `(e^a − e^b)/(a − b)`, equal to
/// `log_mean(e^a, e^b)`.
pub fn exp_divided_difference<T: Real>(a: T, b: T) -> T {
    log_mean(a.exp(), b.exp())
}

fn same_dim<T: Real>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::dim(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `(M + M*) / 2`.
pub fn hermitian_part<T: Real>(m: &ComplexMatrix<T>) -> Result<HermitianMatrix<T>> {
    HermitianMatrix::hermitian_part(m)
}

pub fn matrix_exp<T: Real>(h: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    Ok(h.eigh()?.map(|w| w.exp()))
}

pub fn matrix_log<T: Real>(p: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    let eig = p.eigh()?;
    eig.require_positive(T::threshold(DEFAULT_POSITIVITY_FLOOR))?;
    Ok(eig.map(|w| w.ln()))
}

/// Positive square root of a positive semidefinite matrix.
pub fn matrix_sqrt<T: Real>(p: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    let eig = p.eigh()?;
    let scale = eig.max_abs();
    if eig.min() < -T::threshold(DEFAULT_POSITIVITY_FLOOR) * scale {
        return Err(Error::Positivity {
            eigenvalue: eig.min().as_f64(),
            node: None,
        });
    }
    Ok(eig.map(|w| w.max(T::zero()).sqrt()))
}

/// Inverse of a positive definite matrix.
pub fn inverse_positive<T: Real>(p: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    let eig = p.eigh()?;
    eig.require_positive(T::threshold(DEFAULT_POSITIVITY_FLOOR))?;
    Ok(eig.map(|w| T::one() / w))
}

/// `M_C(Δ) = ∫₀¹ C^{1−τ} Δ C^τ dτ` for positive definite `C`.
pub fn scrambled_multiply<T: Real>(c: &HermitianMatrix<T>, delta: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    same_dim(c, delta)?;
    let eig = c.eigh()?;
    eig.require_positive(T::threshold(DEFAULT_POSITIVITY_FLOOR))?;
    Ok(eig.apply_kernel(delta, log_mean))
}

/// `M_A⁻¹(Δ) = ∫₀^∞ (A + τI)⁻¹ Δ (A + τI)⁻¹ dτ` for positive definite `A`.
pub fn scrambled_divide<T: Real>(a: &HermitianMatrix<T>, delta: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    same_dim(a, delta)?;
    let eig = a.eigh()?;
    eig.require_positive(T::threshold(DEFAULT_POSITIVITY_FLOOR))?;
    Ok(eig.apply_kernel(delta, |x, y| T::one() / log_mean(x, y)))
}

/// Directional derivative of `exp` at `A` along `Δ`, i.e. `M_{e^A}(Δ)`.
pub fn frechet_exp<T: Real>(a: &HermitianMatrix<T>, delta: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    same_dim(a, delta)?;
    let eig = a.eigh()?;
    Ok(eig.apply_kernel(delta, exp_divided_difference))
}

/// Directional derivative of `log` at `A` along `Δ`, i.e. `M_A⁻¹(Δ)`.
pub fn frechet_log<T: Real>(a: &HermitianMatrix<T>, delta: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    scrambled_divide(a, delta)
}

/// Returns the smallest eigenvalue if it exceeds `floor`.
pub fn assert_positive_definite<T: Real>(m: &HermitianMatrix<T>, floor: T) -> Result<T> {
    let min = m.min_eigenvalue()?;
    if min > floor {
        Ok(min)
    } else {
        Err(Error::Positivity {
            eigenvalue: min.as_f64(),
            node: None,
        })
    }
}

/// `⟨X, Y⟩ = Re trace(X* Y)`.
pub fn inner<T: Real>(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>) -> Result<T> {
    if x.shape() != y.shape() {
        return Err(Error::dim(format!("{:?} vs {:?}", x.shape(), y.shape())));
    }
    Ok(inner_unchecked(x, y))
}

pub(crate) fn inner_unchecked<T: Real>(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>) -> T {
    x.iter()
        .zip(y.iter())
        .fold(T::zero(), |acc, (a, b)| acc + a.re * b.re + a.im * b.im)
}

/// Converts a real matrix into a complex one.
pub fn complexify<T: Real>(m: &DMatrix<T>) -> ComplexMatrix<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type H = HermitianMatrix<f64>;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> H {
        let m = DMatrix::from_fn(n, n, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        H::hermitian_part(&m).unwrap().scale(scale)
    }

    fn random_hpd(rng: &mut ChaCha8Rng, n: usize) -> H {
        let a = DMatrix::from_fn(n, n, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        H::from_raw(&a * a.adjoint()).add(&H::scalar(n, 0.1))
    }

    fn max_dev(a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>) -> f64 {
        frobenius(&(a - b))
    }

    /// Composite Simpson approximation of ∫₀¹ C^{1−τ} Δ C^τ dτ.
    fn scrambled_quadrature(c: &H, delta: &H, intervals: usize) -> ComplexMatrix<f64> {
        let eig = c.eigh().unwrap();
        let n = c.dim();
        let mut acc = DMatrix::zeros(n, n);
        let h = 1.0 / intervals as f64;
        for k in 0..=intervals {
            let tau = k as f64 * h;
            let wgt = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let left = eig.map(|w| w.powf(1.0 - tau));
            let right = eig.map(|w| w.powf(tau));
            acc += (left.as_matrix() * delta.as_matrix() * right.as_matrix()).map(|z| z * (wgt * h / 3.0));
        }
        acc
    }

    #[test]
    fn hermitian_part_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[cre(0.0), cre(2.0), cre(0.0), cre(0.0)]);
        let h = hermitian_part(&m).unwrap();
        assert_eq!(
            h.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[cre(0.0), cre(1.0), cre(1.0), cre(0.0)])
        );

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let herm = random_hermitian(&mut rng, 3, 1.0);
        assert_abs_diff_eq!(
            max_dev(hermitian_part(herm.as_matrix()).unwrap().as_matrix(), herm.as_matrix()),
            0.0,
            epsilon = 1e-15
        );

        let skew = herm.as_matrix().map(|z| z * cx(0.0, 1.0));
        assert_abs_diff_eq!(hermitian_part(&skew).unwrap().norm(), 0.0, epsilon = 1e-15);

        assert!(matches!(
            hermitian_part(&DMatrix::<Complex<f64>>::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn construction_rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[cre(1.0), cre(2.0), cre(0.0), cre(1.0)]);
        assert!(matches!(H::new(m), Err(Error::NotHermitian(_))));
        let tiny = DMatrix::from_row_slice(2, 2, &[cre(1.0), cre(1.0 + 1e-15), cre(1.0), cre(1.0)]);
        let h = H::new(tiny).unwrap();
        assert_eq!(h.as_matrix()[(0, 1)], h.as_matrix()[(1, 0)].conj());
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..6 {
            let h = random_hermitian(&mut rng, n, 2.0);
            let eig = h.eigh().unwrap();
            let rebuilt = eig.map(|w| w);
            assert!(max_dev(rebuilt.as_matrix(), h.as_matrix()) <= 1e-10 * h.norm().max(1.0));
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert!(max_dev(&gram, &DMatrix::identity(n, n)) <= 1e-12);
            for i in 1..n {
                assert!(eig.values[i - 1] <= eig.values[i]);
            }
        }
    }

    #[test]
    fn exp_examples() {
        assert_eq!(matrix_exp(&H::zeros(3)).unwrap(), H::identity(3));
        let e = matrix_exp(&H::from_real_diagonal(&[0.0, 2f64.ln()])).unwrap();
        assert!(max_dev(e.as_matrix(), H::from_real_diagonal(&[1.0, 2.0]).as_matrix()) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 4, 1.0);
        let prod = matrix_exp(&h).unwrap().as_matrix() * matrix_exp(&h.scale(-1.0)).unwrap().as_matrix();
        assert!(max_dev(&prod, &DMatrix::identity(4, 4)) < 1e-10);
    }

    #[test]
    fn log_examples() {
        assert!(matrix_log(&H::identity(2)).unwrap().norm() < 1e-15);
        let e = std::f64::consts::E;
        let l = matrix_log(&H::from_real_diagonal(&[e, e * e])).unwrap();
        assert!(max_dev(l.as_matrix(), H::from_real_diagonal(&[1.0, 2.0]).as_matrix()) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_hpd(&mut rng, 4);
        let back = matrix_exp(&matrix_log(&p).unwrap()).unwrap();
        assert!(max_dev(back.as_matrix(), p.as_matrix()) <= 1e-10 * p.norm());

        let err = matrix_log(&H::from_real_diagonal(&[1.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::Positivity { .. }));
    }

    #[test]
    fn log_mean_series_matches_closed_form_near_diagonal() {
        for &(a, b) in &[(1.0, 1.0 + 2e-4), (3.0, 3.0 * (1.0 + 5e-5)), (2.0, 2.0)] {
            let closed = if a == b { a } else { (a - b) / (f64::ln(a) - f64::ln(b)) };
            assert!((log_mean(a, b) - closed).abs() < 1e-11 * a, "{a} {b}");
        }
        assert!((log_mean(2.0f64, 3.0) - log_mean(3.0, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn scrambled_multiply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random_hermitian(&mut rng, 3, 1.0);
        assert!(max_dev(scrambled_multiply(&H::identity(3), &d).unwrap().as_matrix(), d.as_matrix()) < 1e-14);

        let commuting = scrambled_multiply(&H::from_real_diagonal(&[2.0, 3.0]), &H::from_real_diagonal(&[4.0, 5.0])).unwrap();
        assert!(max_dev(commuting.as_matrix(), H::from_real_diagonal(&[8.0, 15.0]).as_matrix()) < 1e-13);

        let e = std::f64::consts::E;
        let c = H::from_real_diagonal(&[1.0, e]);
        let swap = H::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let got = scrambled_multiply(&c, &swap).unwrap();
        let oracle = scrambled_quadrature(&c, &swap, 1000);
        assert!(max_dev(got.as_matrix(), &oracle) < 1e-10);
        assert!((got.as_matrix()[(0, 1)].re - (e - 1.0)).abs() < 1e-14);

        let bad = H::from_real_diagonal(&[1.0, -1.0]);
        assert!(matches!(scrambled_multiply(&bad, &swap), Err(Error::Positivity { .. })));
        assert!(matches!(scrambled_multiply(&H::identity(3), &swap), Err(Error::Dimension(_))));
    }

    #[test]
    fn scrambled_multiply_matches_quadrature_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random_hpd(&mut rng, 3);
        let d = random_hermitian(&mut rng, 3, 1.0);
        let oracle = scrambled_quadrature(&c, &d, 2000);
        let got = scrambled_multiply(&c, &d).unwrap();
        assert!(max_dev(got.as_matrix(), &oracle) < 1e-8 * oracle.norm());
    }

    #[test]
    fn scrambled_divide_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = random_hermitian(&mut rng, 3, 1.0);
        assert!(max_dev(scrambled_divide(&H::identity(3), &d).unwrap().as_matrix(), d.as_matrix()) < 1e-14);

        let a = H::from_real_diagonal(&[2.0, 5.0]);
        let out = scrambled_divide(&a, &a).unwrap();
        assert!(max_dev(out.as_matrix(), H::identity(2).as_matrix()) < 1e-14);

        let a = random_hpd(&mut rng, 4);
        let d = random_hermitian(&mut rng, 4, 1.0);
        let there = scrambled_divide(&a, &d).unwrap();
        let back = scrambled_multiply(&a, &there).unwrap();
        assert!(max_dev(back.as_matrix(), d.as_matrix()) <= 1e-10 * d.norm());
        assert!(matches!(
            scrambled_divide(&H::from_real_diagonal(&[0.0, 1.0]), &H::identity(2)),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn frechet_exp_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = random_hermitian(&mut rng, 3, 1.0);
        assert!(max_dev(frechet_exp(&H::zeros(3), &d).unwrap().as_matrix(), d.as_matrix()) < 1e-14);

        let a = H::from_real_diagonal(&[0.3, -0.7, 1.1]);
        let dd = H::from_real_diagonal(&[1.0, 2.0, -1.0]);
        let expected = matrix_exp(&a).unwrap().as_matrix() * dd.as_matrix();
        assert!(max_dev(frechet_exp(&a, &dd).unwrap().as_matrix(), &expected) < 1e-14);

        let a = random_hermitian(&mut rng, 4, 0.5);
        let d = random_hermitian(&mut rng, 4, 0.5);
        let eps = 1e-5;
        let fd = (matrix_exp(&a.add(&d.scale(eps))).unwrap().as_matrix()
            - matrix_exp(&a.sub(&d.scale(eps))).unwrap().as_matrix())
        .map(|z| z / (2.0 * eps));
        let df = frechet_exp(&a, &d).unwrap();
        assert!(max_dev(&fd, df.as_matrix()) <= 1e-6 * df.norm());

        let via_multiply = scrambled_multiply(&matrix_exp(&a).unwrap(), &d).unwrap();
        assert!(max_dev(via_multiply.as_matrix(), df.as_matrix()) < 1e-12);
    }

    #[test]
    fn frechet_log_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_hermitian(&mut rng, 3, 1.0);
        assert!(max_dev(frechet_log(&H::identity(3), &d).unwrap().as_matrix(), d.as_matrix()) < 1e-14);

        let a = random_hpd(&mut rng, 4);
        let d = random_hermitian(&mut rng, 4, 1.0);
        let dl = frechet_log(&a, &d).unwrap();
        assert!((a.trace_product(&dl) - d.trace()).abs() <= 1e-10 * d.norm());

        let eps = 1e-5;
        let fd = (matrix_log(&a.add(&d.scale(eps))).unwrap().as_matrix()
            - matrix_log(&a.sub(&d.scale(eps))).unwrap().as_matrix())
        .map(|z| z / (2.0 * eps));
        assert!(max_dev(&fd, dl.as_matrix()) <= 1e-6 * dl.norm());
    }

    #[test]
    fn positive_definite_assertion() {
        assert_eq!(assert_positive_definite(&H::identity(2), 0.5).unwrap(), 1.0);
        match assert_positive_definite(&H::from_real_diagonal(&[1.0, -1.0]), 0.0) {
            Err(Error::Positivity { eigenvalue, .. }) => assert!((eigenvalue + 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = DMatrix::from_fn(4, 4, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let gram = H::from_raw(a.adjoint() * &a).add(&H::scalar(4, 1e-3));
        assert!(assert_positive_definite(&gram, 1e-4).is_ok());
    }

    #[test]
    fn inner_product_examples() {
        let i2 = DMatrix::<Complex<f64>>::identity(2, 2);
        assert_eq!(inner(&i2, &i2).unwrap(), 2.0);
        let ji = i2.map(|z| z * cx(0.0, 1.0));
        assert_eq!(inner(&ji, &i2).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(3, 2, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        assert!((inner(&x, &x).unwrap() - frobenius::<f64>(&x).powi(2)).abs() < 1e-14);
        assert!(inner(&x, &i2).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = HermitianMatrix::<f32>::from_real_diagonal(&[0.5, 2.0]);
        let l = matrix_log(&a).unwrap();
        let back = matrix_exp(&l).unwrap();
        assert!(frobenius(&(back.as_matrix() - a.as_matrix())) < 1e-5);
        let d = HermitianMatrix::<f32>::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let round = scrambled_multiply(&a, &scrambled_divide(&a, &d).unwrap()).unwrap();
        assert!(frobenius(&(round.as_matrix() - d.as_matrix())) < 1e-5);
    }
}
