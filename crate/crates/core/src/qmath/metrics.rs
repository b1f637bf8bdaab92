use num_complex::Complex;

use super::decomp::{singular_values, HermitianEigen};
use super::matrix::{pauli, Operator4};
use super::state::{DensityMatrix, PureState2Q};
use crate::scalar::Real;

/// Fidelity `<target|rho|target>` of a state with a pure target.
pub fn fidelity<T: Real>(rho: &DensityMatrix<T>, target: &PureState2Q<T>) -> T {
    rho.sandwich(target.amplitudes())
        .max(T::zero())
        .min(T::one())
}

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)`.
///
/// The `l_i` are the singular values of `tau_ij = v_i^T (Y x Y) v_j` where
/// `v_i = sqrt(p_i) e_i` runs over the eigen-decomposition of `rho`. This has
/// the same spectrum as `sqrt(sqrt(rho) rho~ sqrt(rho))` but avoids taking
/// square roots of round-off sized eigenvalues.
pub fn concurrence<T: Real>(rho: &DensityMatrix<T>) -> T {
    let yy = pauli::y::<T>().kron(&pauli::y());
    let eig = HermitianEigen::new(rho.matrix());
    let v: [[Complex<T>; 4]; 4] = std::array::from_fn(|k| {
        let w = eig.values[k].max(T::zero()).sqrt();
        eig.vector(k).map(|z| z.scale(w))
    });
    let mut tau = Operator4::<T>::zeros();
    for i in 0..4 {
        let flipped = yy.apply(&v[i]);
        for j in 0..4 {
            // v_j^T (Y x Y) v_i, no conjugation
            tau[(j, i)] = (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + v[j][k] * flipped[k]
            });
        }
    }
    let l = singular_values(&tau);
    (l[0] - l[1] - l[2] - l[3]).max(T::zero()).min(T::one())
}

/// `|a_00 a_11 - a_01 a_10| * 2`, the closed form concurrence of a pure state.
pub fn pure_concurrence<T: Real>(s: &PureState2Q<T>) -> T {
    let a = s.amplitudes();
    ((a[0] * a[3] - a[1] * a[2]) * Complex::new(T::lit(2.0), T::zero())).norm()
}

/// Trace distance `(1/2) || a - b ||_1`.
pub fn trace_distance<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> T {
    let diff: Operator4<T> = *a.matrix() - *b.matrix();
    HermitianEigen::new(&diff)
        .values
        .iter()
        .map(|x| x.abs())
        .sum::<T>()
        * T::lit(0.5)
}
