//! Dense complex linear algebra for one and two qubits, plus state metrics.
//!
//! Photon 1 is always the left tensor factor and `|H> = |0>`, `|V> = |1>`.

pub mod decomp;
pub mod matrix;
pub mod metrics;
pub mod state;

pub use matrix::{inner, kron_vec, pauli, CMatrix, CVector, Operator2, Operator4};
pub use metrics::{concurrence, fidelity, pure_concurrence, trace_distance};
pub use state::{ket, DensityMatrix, Ket2, PureState2Q, QuantumState};

/// Kronecker product of two single-qubit operators, qubit 1 leftmost.
pub fn tensor<T: crate::Real>(a: &Operator2<T>, b: &Operator2<T>) -> Operator4<T> {
    a.kron(b)
}

/// Two-qubit product ket `|a> (x) |b>`.
pub fn tensor_kets<T: crate::Real>(a: &Ket2<T>, b: &Ket2<T>) -> CVector<T, 4> {
    kron_vec(a, b)
}
