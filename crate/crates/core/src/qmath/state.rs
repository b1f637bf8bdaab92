use num_complex::Complex;

use super::decomp::HermitianEigen;
use super::matrix::{inner, kron_vec, CMatrix, CVector, Operator4};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-qubit ket, `|H> = |0>` and `|V> = |1>`.
pub type Ket2<T> = CVector<T, 2>;

/// Normalized two-qubit pure state.
///
/// Amplitudes are ordered `|00>, |01>, |10>, |11>` with photon 1 as the left
/// tensor factor everywhere in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState2Q<T> {
    amps: [Complex<T>; 4],
}

impl<T: Real> PureState2Q<T> {
    /// Normalizes `amps`; fails on a zero vector.
    pub fn new(amps: [Complex<T>; 4]) -> Result<Self> {
        let n2: T = amps.iter().map(|a| a.norm_sqr()).sum();
        if !(n2 > T::min_positive_value()) || !n2.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = T::one() / n2.sqrt();
        Ok(Self {
            amps: amps.map(|a| a.scale(inv)),
        })
    }

    pub fn from_real(amps: [f64; 4]) -> Result<Self> {
        Self::new(amps.map(|a| Complex::new(T::lit(a), T::zero())))
    }

    /// `|a> (x) |b>`.
    pub fn product(a: &Ket2<T>, b: &Ket2<T>) -> Result<Self> {
        Self::new(kron_vec(a, b))
    }

    pub fn amplitudes(&self) -> &[Complex<T>; 4] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `U |psi>`, renormalized to absorb round-off.
    pub fn evolve(&self, u: &Operator4<T>) -> Result<Self> {
        Self::new(u.apply(&self.amps))
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        inner(&self.amps, &other.amps)
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    pub fn projector(&self) -> Operator4<T> {
        CMatrix::outer(&self.amps, &self.amps)
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix {
            m: self.projector(),
        }
    }

    /// `<psi|A|psi>` without Hermiticity validation.
    pub(crate) fn expectation_unchecked(&self, op: &Operator4<T>) -> Complex<T> {
        inner(&self.amps, &op.apply(&self.amps))
    }
}

/// Two-qubit density matrix satisfying Hermiticity, unit trace and positivity
/// (within [`Real::phys_tol`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    m: Operator4<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates the physicality invariants and wraps `m`.
    pub fn new(m: Operator4<T>) -> Result<Self> {
        let tol = T::phys_tol();
        let defect = m.hermitian_defect();
        if !(defect <= tol) {
            return Err(Error::NotHermitian(defect.to_f64_lossy()));
        }
        let tr = m.trace();
        if !((tr.re - T::one()).abs() <= tol) || !(tr.im.abs() <= tol) {
            return Err(Error::InvalidTrace(tr.re.to_f64_lossy()));
        }
        let eig = HermitianEigen::new(&m);
        if !(eig.values[0] >= -tol) {
            return Err(Error::NotPositive(eig.values[0].to_f64_lossy()));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix that is physical by construction (e.g. `L L^dagger / tr`).
    pub(crate) fn new_unchecked(m: Operator4<T>) -> Self {
        Self { m }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Operator4::identity().scale_real(T::lit(0.25)),
        }
    }

    pub fn matrix(&self) -> &Operator4<T> {
        &self.m
    }

    pub fn eigenvalues(&self) -> [T; 4] {
        HermitianEigen::new(&self.m).values
    }

    /// `U rho U^dagger`.
    pub fn evolve(&self, u: &Operator4<T>) -> Self {
        Self {
            m: *u * self.m * u.adjoint(),
        }
    }

    /// Convex combination `(1 - w) self + w other`.
    pub fn mix(&self, other: &Self, w: T) -> Result<Self> {
        if !(w >= T::zero() && w <= T::one()) {
            return Err(crate::error::invalid("w", "mixing weight outside [0, 1]"));
        }
        Ok(Self {
            m: self.m.scale_real(T::one() - w) + other.m.scale_real(w),
        })
    }

    pub fn purity(&self) -> T {
        (self.m * self.m).trace().re
    }

    /// `<a|rho|a>` for an arbitrary (not necessarily normalized) vector.
    pub fn sandwich(&self, v: &CVector<T, 4>) -> T {
        inner(v, &self.m.apply(v)).re
    }
}

impl<T: Real> From<PureState2Q<T>> for DensityMatrix<T> {
    fn from(s: PureState2Q<T>) -> Self {
        s.to_density()
    }
}

/// Anything an expectation value can be taken on.
pub trait QuantumState<T: Real> {
    fn density(&self) -> DensityMatrix<T>;

    /// `Tr(A rho)`; `A` must be Hermitian.
    fn expectation(&self, op: &Operator4<T>) -> Result<T>;
}

fn check_hermitian<T: Real>(op: &Operator4<T>) -> Result<()> {
    let d = op.hermitian_defect();
    if d <= T::phys_tol() {
        Ok(())
    } else {
        Err(Error::NotHermitian(d.to_f64_lossy()))
    }
}

impl<T: Real> QuantumState<T> for PureState2Q<T> {
    fn density(&self) -> DensityMatrix<T> {
        self.to_density()
    }

    fn expectation(&self, op: &Operator4<T>) -> Result<T> {
        check_hermitian(op)?;
        Ok(self.expectation_unchecked(op).re)
    }
}

impl<T: Real> QuantumState<T> for DensityMatrix<T> {
    fn density(&self) -> DensityMatrix<T> {
        *self
    }

    fn expectation(&self, op: &Operator4<T>) -> Result<T> {
        check_hermitian(op)?;
        Ok((*op * self.m).trace().re)
    }
}

/// Qubit basis ket `|0>`/`|1>` with real amplitudes.
pub fn ket<T: Real>(a: f64, b: f64) -> Ket2<T> {
    [
        Complex::new(T::lit(a), T::zero()),
        Complex::new(T::lit(b), T::zero()),
    ]
}
