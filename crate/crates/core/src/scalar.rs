//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the simulation is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Tolerance used when checking Hermiticity, trace and positivity of states.
    fn phys_tol() -> Self;

    /// Tolerance used for unit-norm checks on pure states.
    fn norm_tol() -> Self;

    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Eigen-decomposition of a Hermitian matrix (values unsorted).
    fn eigh(a: DMatrix<Complex<Self>>) -> (DVector<Self>, DMatrix<Complex<Self>>);

    /// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
    fn cholesky(a: DMatrix<Complex<Self>>) -> Option<DMatrix<Complex<Self>>>;

    /// Singular values of a complex matrix.
    fn singular_values(a: DMatrix<Complex<Self>>) -> DVector<Self>;

    /// Solves a dense real linear system by LU with partial pivoting.
    fn lu_solve(a: DMatrix<Self>, b: DVector<Self>) -> Option<DVector<Self>>;
}

macro_rules! linalg_impl {
    () => {
        fn eigh(a: DMatrix<Complex<Self>>) -> (DVector<Self>, DMatrix<Complex<Self>>) {
            let e = nalgebra::SymmetricEigen::new(a);
            (e.eigenvalues, e.eigenvectors)
        }

        fn cholesky(a: DMatrix<Complex<Self>>) -> Option<DMatrix<Complex<Self>>> {
            nalgebra::Cholesky::new(a).map(|c| c.unpack())
        }

        fn singular_values(a: DMatrix<Complex<Self>>) -> DVector<Self> {
            a.singular_values()
        }

        fn lu_solve(a: DMatrix<Self>, b: DVector<Self>) -> Option<DVector<Self>> {
            a.lu().solve(&b)
        }
    };
}

impl Real for f64 {
    fn phys_tol() -> Self {
        1e-10
    }
    fn norm_tol() -> Self {
        1e-12
    }
    linalg_impl!();
}

impl Real for f32 {
    fn phys_tol() -> Self {
        1e-5
    }
    fn norm_tol() -> Self {
        1e-6
    }
    linalg_impl!();
}

/// Wraps an angle into the half-open interval (-pi, pi].
pub fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let mut y = x % two_pi;
    if y <= -T::PI() {
        y = y + two_pi;
    } else if y > T::PI() {
        y = y - two_pi;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-1.5 * PI) - 0.5 * PI).abs() < 1e-15);
        assert!((wrap_angle(7.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25f32) - 0.25).abs() < 1e-7);
    }
}
