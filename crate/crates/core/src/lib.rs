//! Simulation and analysis of a photonic two-qubit weighted graph state used
//! as a phase sensor.
//!
//! State algebra, optics, measurement and sensing are generic over [`Real`]
//! (`f32` or `f64`). Optimizers, tomography and the bootstrap work in `f64`.
//! The aliases below fix the scalar to `f64`.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod measurement;
pub mod metrology;
pub mod optics;
pub mod optimize;
pub mod qmath;
pub mod scalar;
pub mod stategen;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
pub use scalar::{wrap_angle, Real};

/// Double-precision two-qubit pure state.
pub type PureState = qmath::PureState2Q<f64>;
/// Double-precision two-qubit density matrix.
pub type Density = qmath::DensityMatrix<f64>;
/// Double-precision single-qubit operator.
pub type Op2 = qmath::Operator2<f64>;
/// Double-precision two-qubit operator.
pub type Op4 = qmath::Operator4<f64>;
/// Double-precision local product observable.
pub type Observable = measurement::Observable<f64>;
/// Double-precision sensing configuration.
pub type SensingConfig = metrology::SensingConfig<f64>;
/// Double-precision sensing result.
pub type SensingResult = metrology::SensingResult<f64>;
