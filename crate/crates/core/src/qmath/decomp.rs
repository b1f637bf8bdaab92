//! Hermitian eigen-decomposition, Cholesky and a real linear solver, backed by
//! nalgebra and adapted to the fixed-size [`CMatrix`] type.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::matrix::CMatrix;
use crate::scalar::Real;

fn to_dense<T: Real, const N: usize>(a: &CMatrix<T, N>) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(N, N, |i, j| a.m[i][j])
}

fn from_dense<T: Real, const N: usize>(d: &DMatrix<Complex<T>>) -> CMatrix<T, N> {
    let mut out = CMatrix::<T, N>::zeros();
    for i in 0..N {
        for j in 0..N {
            out.m[i][j] = d[(i, j)];
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; column `k` of `vectors` is the
/// eigenvector belonging to `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T, const N: usize> {
    pub values: [T; N],
    pub vectors: CMatrix<T, N>,
}

impl<T: Real, const N: usize> HermitianEigen<T, N> {
    pub fn new(a: &CMatrix<T, N>) -> Self {
        // Symmetrize so round-off in the input cannot leak into the solver.
        let herm = (*a + a.adjoint()).scale_real(T::lit(0.5));
        let (vals, vecs) = T::eigh(to_dense(&herm));
        let mut order: [usize; N] = std::array::from_fn(|i| i);
        order.sort_by(|&i, &j| {
            vals[i]
                .partial_cmp(&vals[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = std::array::from_fn(|k| vals[order[k]]);
        let mut vectors = CMatrix::<T, N>::zeros();
        for (k, &src) in order.iter().enumerate() {
            for r in 0..N {
                vectors.m[r][k] = vecs[(r, src)];
            }
        }
        Self { values, vectors }
    }

    /// Eigenvector `k` as a column.
    pub fn vector(&self, k: usize) -> [Complex<T>; N] {
        std::array::from_fn(|r| self.vectors.m[r][k])
    }

    /// Rebuilds `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn map(&self, f: impl Fn(T) -> T) -> CMatrix<T, N> {
        let mut out = CMatrix::<T, N>::zeros();
        for k in 0..N {
            let fk = f(self.values[k]);
            if fk.is_zero() {
                continue;
            }
            let v = self.vector(k);
            out = out + CMatrix::outer(&v, &v).scale_real(fk);
        }
        out
    }
}

/// Principal square root of a positive semi-definite Hermitian matrix.
/// Negative eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt<T: Real, const N: usize>(a: &CMatrix<T, N>) -> CMatrix<T, N> {
    HermitianEigen::new(a).map(|x| x.max(T::zero()).sqrt())
}

/// Lower-triangular `L` with `a = L L^dagger` for a positive-definite `a`.
/// Returns `None` unless every pivot is real and strictly positive.
pub fn cholesky<T: Real, const N: usize>(a: &CMatrix<T, N>) -> Option<CMatrix<T, N>> {
    let l: CMatrix<T, N> = from_dense(&T::cholesky(to_dense(a))?);
    let tiny = T::epsilon() * a.max_abs();
    let ok = (0..N).all(|k| l.m[k][k].re > tiny && l.m[k][k].im.abs() <= tiny);
    ok.then_some(l)
}

/// Singular values in decreasing order.
pub fn singular_values<T: Real, const N: usize>(a: &CMatrix<T, N>) -> [T; N] {
    let s = T::singular_values(to_dense(a));
    let mut out: [T; N] = std::array::from_fn(|k| s[k]);
    out.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Solves the dense real system `a x = b`; `None` for a singular matrix.
pub fn solve_real<T: Real>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let x = T::lu_solve(m, DVector::from_column_slice(b))?;
    x.iter()
        .all(|v| v.is_finite())
        .then(|| x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::matrix::pauli;
    use proptest::prelude::*;

    fn random_hermitian(seed: &[f64; 16]) -> CMatrix<f64, 4> {
        let mut m = CMatrix::<f64, 4>::zeros();
        for i in 0..4 {
            m.m[i][i] = Complex::new(seed[i], 0.0);
        }
        let mut k = 4;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let z = Complex::new(seed[k], seed[k + 6]);
                k += 1;
                m.m[i][j] = z;
                m.m[j][i] = z.conj();
            }
        }
        m
    }

    #[test]
    fn pauli_y_spectrum() {
        let e = HermitianEigen::new(&pauli::y::<f64>());
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!((e.map(|x| x) - pauli::y()).max_abs() < 1e-14);
    }

    #[test]
    fn degenerate_spectrum_reconstructs() {
        let m = pauli::z::<f64>().kron(&pauli::z());
        let e = HermitianEigen::new(&m);
        assert_eq!(e.values.map(|x| x.round()), [-1.0, -1.0, 1.0, 1.0]);
        assert!(e.vectors.is_unitary(1e-13));
    }

    #[test]
    fn cholesky_roundtrip() {
        let m = CMatrix::<f64, 4>::identity() + pauli::x::<f64>().kron(&pauli::y()).scale_real(0.3);
        let l = cholesky(&m).unwrap();
        assert!((l * l.adjoint() - m).max_abs() < 1e-14);
        assert!(l.m[0][1].norm() == 0.0);
        assert!(cholesky(&(-CMatrix::<f64, 4>::identity())).is_none());
    }

    #[test]
    fn solve_small_system() {
        let a = vec![vec![2.0f64, 1.0], vec![1.0, 3.0]];
        let x = solve_real(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_real(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn single_precision_eigen() {
        let e = HermitianEigen::new(&pauli::x::<f32>().kron(&pauli::y()));
        assert!((e.values[0] + 1.0).abs() < 1e-5 && (e.values[3] - 1.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn eigen_reconstructs_random_hermitian(seed in prop::array::uniform16(-2.0f64..2.0)) {
            let m = random_hermitian(&seed);
            let e = HermitianEigen::new(&m);
            prop_assert!(e.vectors.is_unitary(1e-12));
            prop_assert!((e.map(|x| x) - m).max_abs() < 1e-12);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
