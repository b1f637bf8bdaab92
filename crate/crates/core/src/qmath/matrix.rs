use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Dense `N x N` complex matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMatrix<T, const N: usize> {
    pub(crate) m: [[Complex<T>; N]; N],
}

/// Single-qubit (Jones) operator.
pub type Operator2<T> = CMatrix<T, 2>;
/// Two-qubit operator.
pub type Operator4<T> = CMatrix<T, 4>;

/// Complex column vector of length `N`.
pub type CVector<T, const N: usize> = [Complex<T>; N];

impl<T: Real, const N: usize> CMatrix<T, N> {
    pub fn zeros() -> Self {
        Self {
            m: [[Complex::zero(); N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            out.m[i][i] = Complex::one();
        }
        out
    }

    pub fn from_rows(m: [[Complex<T>; N]; N]) -> Self {
        Self { m }
    }

    /// Builds a matrix from real entries.
    pub fn from_real(r: [[f64; N]; N]) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] = Complex::new(T::lit(r[i][j]), T::zero());
            }
        }
        out
    }

    pub fn diag(d: [Complex<T>; N]) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            out.m[i][i] = d[i];
        }
        out
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &CVector<T, N>, b: &CVector<T, N>) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] = a[i] * b[j].conj();
            }
        }
        out
    }

    pub fn rows(&self) -> &[[Complex<T>; N]; N] {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<T> {
        (0..N).fold(Complex::zero(), |acc, i| acc + self.m[i][i])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
        }
        out
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn apply(&self, v: &CVector<T, N>) -> CVector<T, N> {
        let mut out = [Complex::zero(); N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).fold(Complex::zero(), |acc, j| acc + self.m[i][j] * v[j]);
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        (self.adjoint() * *self - Self::identity()).max_abs() <= tol
    }

    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Frobenius distance to `other` after removing the best global phase.
    ///
    /// The phase is fixed by the largest-magnitude entry of `other`.
    pub fn phase_aligned_distance(&self, other: &Self) -> T {
        let mut best = (0, 0);
        let mut best_mag = T::zero();
        for i in 0..N {
            for j in 0..N {
                let mag = other.m[i][j].norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = (i, j);
                }
            }
        }
        if best_mag == T::zero() {
            return self.norm();
        }
        let ratio = self.m[best.0][best.1] / other.m[best.0][best.1];
        let phase = if ratio.norm() == T::zero() {
            Complex::one()
        } else {
            ratio / ratio.norm()
        };
        (*self - other.scale(phase)).norm()
    }
}

impl<T: Real> CMatrix<T, 2> {
    /// Kronecker product with `self` as the left (qubit 1) factor.
    pub fn kron(&self, rhs: &Self) -> CMatrix<T, 4> {
        let mut out = CMatrix::<T, 4>::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out.m[2 * i + k][2 * j + l] = self.m[i][j] * rhs.m[k][l];
                    }
                }
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Index<(usize, usize)> for CMatrix<T, N> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.m[i][j]
    }
}

impl<T: Real, const N: usize> IndexMut<(usize, usize)> for CMatrix<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.m[i][j]
    }
}

impl<T: Real, const N: usize> Mul for CMatrix<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.m[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..N {
                    out.m[i][j] = out.m[i][j] + a * rhs.m[k][j];
                }
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Add for CMatrix<T, N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] = out.m[i][j] + rhs.m[i][j];
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Sub for CMatrix<T, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] = out.m[i][j] - rhs.m[i][j];
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Neg for CMatrix<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-T::one())
    }
}

/// `<a|b>`
pub fn inner<T: Real, const N: usize>(a: &CVector<T, N>, b: &CVector<T, N>) -> Complex<T> {
    a.iter()
        .zip(b.iter())
        .fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

/// Kronecker product of two single-qubit kets, qubit 1 leftmost.
pub fn kron_vec<T: Real>(a: &CVector<T, 2>, b: &CVector<T, 2>) -> CVector<T, 4> {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Pauli matrices `I, X, Y, Z`.
pub mod pauli {
    use super::*;

    pub fn i<T: Real>() -> Operator2<T> {
        Operator2::identity()
    }

    pub fn x<T: Real>() -> Operator2<T> {
        Operator2::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y<T: Real>() -> Operator2<T> {
        let z = Complex::zero();
        Operator2::from_rows([[z, -Complex::<T>::i()], [Complex::i(), z]])
    }

    pub fn z<T: Real>() -> Operator2<T> {
        Operator2::from_real([[1.0, 0.0], [0.0, -1.0]])
    }
}
