//! Jones calculus for waveplates and the QWP-HWP-QWP realization of SU(2).
//!
//! Two rotation conventions appear here. The "tilde" rotations
//! `Rt_n(psi) = exp(-i psi n.sigma)` parameterize the waveplates and Euler
//! angles; the standard rotations `R_n(theta) = exp(-i theta n.sigma / 2)`
//! are used everywhere else. They are related by `Rt_n(theta / 2) = R_n(theta)`,
//! which [`rotation`] encodes.
//!
//! Angles are in the internal (anticlockwise from horizontal) convention.
//! [`to_lab_angle`] converts to the lab convention (clockwise from vertical);
//! the conversion is applied to half- and quarter-wave plates alike.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::qmath::{pauli, Operator2};
use crate::scalar::{wrap_angle, Real};

/// Rotation axis on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    Identity,
}

/// Retarder type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Waveplate {
    Quarter,
    Half,
}

/// `exp(-i psi sigma_axis)`.
pub fn tilde_rotation<T: Real>(axis: Axis, psi: T) -> Operator2<T> {
    let (c, s) = (psi.cos(), psi.sin());
    let z = T::zero();
    match axis {
        Axis::Identity => Operator2::identity(),
        Axis::X => Operator2::from_rows([
            [Complex::new(c, z), Complex::new(z, -s)],
            [Complex::new(z, -s), Complex::new(c, z)],
        ]),
        Axis::Y => Operator2::from_rows([
            [Complex::new(c, z), Complex::new(-s, z)],
            [Complex::new(s, z), Complex::new(c, z)],
        ]),
        Axis::Z => Operator2::diag([Complex::new(c, -s), Complex::new(c, s)]),
    }
}

/// Standard rotation `R_axis(theta) = exp(-i theta sigma_axis / 2)`.
pub fn rotation<T: Real>(axis: Axis, theta: T) -> Operator2<T> {
    tilde_rotation(axis, theta * T::lit(0.5))
}

/// Pauli matrix for an axis (`I` for [`Axis::Identity`]).
pub fn pauli_for<T: Real>(axis: Axis) -> Operator2<T> {
    match axis {
        Axis::X => pauli::x(),
        Axis::Y => pauli::y(),
        Axis::Z => pauli::z(),
        Axis::Identity => pauli::i(),
    }
}

/// Jones matrix `Rt_y(angle) W0 Rt_y(-angle)` with `W0 = diag(1, i)` for a
/// quarter-wave plate and `diag(1, -1)` for a half-wave plate.
pub fn waveplate_jones<T: Real>(kind: Waveplate, angle: T) -> Operator2<T> {
    let w0 = match kind {
        Waveplate::Quarter => Operator2::diag([Complex::new(T::one(), T::zero()), Complex::i()]),
        Waveplate::Half => Operator2::from_real([[1.0, 0.0], [0.0, -1.0]]),
    };
    tilde_rotation(Axis::Y, angle) * w0 * tilde_rotation(Axis::Y, -angle)
}

pub fn qwp<T: Real>(angle: T) -> Operator2<T> {
    waveplate_jones(Waveplate::Quarter, angle)
}

pub fn hwp<T: Real>(angle: T) -> Operator2<T> {
    waveplate_jones(Waveplate::Half, angle)
}

/// Euler angles of `U = Rt_y(varphi) Rt_z(-xi) Rt_y(zeta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub varphi: T,
    pub xi: T,
    pub zeta: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(varphi: T, xi: T, zeta: T) -> Self {
        Self { varphi, xi, zeta }
    }

    pub fn unitary(&self) -> Operator2<T> {
        tilde_rotation(Axis::Y, self.varphi)
            * tilde_rotation(Axis::Z, -self.xi)
            * tilde_rotation(Axis::Y, self.zeta)
    }

    /// Euler angles reproducing `R_axis(theta)`.
    pub fn for_rotation(axis: Axis, theta: T) -> Self {
        let q = T::FRAC_PI_4();
        let half = theta * T::lit(0.5);
        match axis {
            Axis::X => Self::new(-q, half, q),
            Axis::Y => Self::new(T::zero(), T::zero(), half),
            Axis::Z => Self::new(T::zero(), -half, T::zero()),
            Axis::Identity => Self::new(T::zero(), T::zero(), T::zero()),
        }
    }
}

/// Angles of `QWP(eta1) HWP(tau) QWP(eta2)`, each stored in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveplateTriple<T> {
    pub eta1: T,
    pub tau: T,
    pub eta2: T,
}

impl<T: Real> WaveplateTriple<T> {
    pub fn new(eta1: T, tau: T, eta2: T) -> Self {
        Self {
            eta1: wrap_angle(eta1),
            tau: wrap_angle(tau),
            eta2: wrap_angle(eta2),
        }
    }

    /// Composite Jones operator `QWP(eta1) HWP(tau) QWP(eta2)`.
    pub fn compose(&self) -> Operator2<T> {
        qwp(self.eta1) * hwp(self.tau) * qwp(self.eta2)
    }

    /// The same triple expressed in the lab convention.
    pub fn to_lab(&self) -> Self {
        Self {
            eta1: to_lab_angle(self.eta1),
            tau: to_lab_angle(self.tau),
            eta2: to_lab_angle(self.eta2),
        }
    }
}

/// `eta1 = varphi - pi/4`, `eta2 = -zeta - pi/4`,
/// `tau = (varphi + xi - zeta)/2 - pi/4`.
pub fn euler_to_waveplates<T: Real>(e: &EulerAngles<T>) -> WaveplateTriple<T> {
    let q = T::FRAC_PI_4();
    WaveplateTriple::new(
        e.varphi - q,
        (e.varphi + e.xi - e.zeta) * T::lit(0.5) - q,
        -e.zeta - q,
    )
}

/// Waveplate triple realizing `R_axis(theta)` up to global phase.
pub fn rotation_waveplates<T: Real>(axis: Axis, theta: T) -> WaveplateTriple<T> {
    euler_to_waveplates(&EulerAngles::for_rotation(axis, theta))
}

/// Internal angle to lab angle: `pi/2 - tau`, wrapped to `(-pi, pi]`.
///
/// The map is an involution, so it also converts lab angles back.
pub fn to_lab_angle<T: Real>(tau: T) -> T {
    wrap_angle(T::FRAC_PI_2() - tau)
}

/// Lab angle to internal angle.
pub fn from_lab_angle<T: Real>(lab: T) -> T {
    to_lab_angle(lab)
}

/// Jones operator of a measurement stage: the photon passes a QWP then a HWP
/// (both given in lab degrees) before a PBS that transmits `|H>`.
pub fn analyzer_jones<T: Real>(h_lab_deg: T, q_lab_deg: T) -> Operator2<T> {
    hwp(from_lab_angle(h_lab_deg.to_radians())) * qwp(from_lab_angle(q_lab_deg.to_radians()))
}
