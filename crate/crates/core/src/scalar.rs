//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All linear algebra is generic over a real field `T` (instantiated with
//! `f32` or `f64`); complex entries are `Complex<T>`.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, LowerExp};

/// Real scalar usable throughout the crate.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + LowerExp + Debug + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A relative threshold that never drops below a few hundred ulps of the
    /// scalar type, so that `f64` literals stay meaningful in `f32`.
    #[inline]
    fn threshold(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::of(256.0);
        Self::of(x).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;

/// Dense rectangular complex matrix.
pub type ComplexMatrix<T> = DMatrix<Complex<T>>;

/// Dense real vector.
pub type RealVector<T> = DVector<T>;

/// Dense real matrix.
pub type RealMatrix<T> = DMatrix<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cre<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `e^{j·phase}`.
#[inline]
pub(crate) fn expj<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Frobenius norm of a complex matrix.
pub fn frobenius<T: Real>(m: &ComplexMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub(crate) fn all_finite<T: Real>(m: &ComplexMatrix<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
