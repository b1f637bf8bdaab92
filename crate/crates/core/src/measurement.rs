//! Local product observables, their projector bases and waveplate settings,
//! outcome probabilities and simulated coincidence counts.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optics::analyzer_jones;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::qmath::{inner, ket, kron_vec, DensityMatrix, Ket2, Operator2, Operator4};
use crate::scalar::Real;

/// Outcome order used for every four-element array in this module.
pub const OUTCOME_LABELS: [&str; 4] = ["++", "+-", "-+", "--"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

impl PauliLabel {
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::X, PauliLabel::Y, PauliLabel::Z];
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            PauliLabel::I => "I",
            PauliLabel::X => "X",
            PauliLabel::Y => "Y",
            PauliLabel::Z => "Z",
        };
        f.write_str(c)
    }
}

impl FromStr for PauliLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(PauliLabel::I),
            "X" => Ok(PauliLabel::X),
            "Y" => Ok(PauliLabel::Y),
            "Z" => Ok(PauliLabel::Z),
            _ => Err(invalid("pauli label", format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

/// `|beta, alpha, +> = cos(b/2)|0> + sin(b/2) e^{i a}|1>` and
/// `|beta, alpha, -> = -sin(b/2)|0> + cos(b/2) e^{i a}|1>`.
pub fn axis_ket<T: Real>(beta: T, alpha: T, outcome: Outcome) -> Ket2<T> {
    let half = beta * T::lit(0.5);
    let (c, s) = (half.cos(), half.sin());
    let phase = Complex::from_polar(T::one(), alpha);
    match outcome {
        Outcome::Plus => [Complex::new(c, T::zero()), phase.scale(s)],
        Outcome::Minus => [Complex::new(-s, T::zero()), phase.scale(c)],
    }
}

/// Measured basis of one photon with the `+1/-1` weights of its outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalBasis<T> {
    pub plus: Ket2<T>,
    pub minus: Ket2<T>,
    pub weights: [i8; 2],
}

impl<T: Real> LocalBasis<T> {
    /// Pauli eigenbasis. The identity is measured in the `H/V` basis with both
    /// outcomes weighted `+1`.
    pub fn pauli(label: PauliLabel) -> Self {
        let s = T::FRAC_1_SQRT_2();
        let r = |x: T| Complex::new(x, T::zero());
        let (plus, minus) = match label {
            PauliLabel::I | PauliLabel::Z => (ket(1.0, 0.0), ket(0.0, 1.0)),
            PauliLabel::X => ([r(s), r(s)], [r(s), r(-s)]),
            PauliLabel::Y => (
                [r(s), Complex::new(T::zero(), s)],
                [r(s), Complex::new(T::zero(), -s)],
            ),
        };
        let weights = if label == PauliLabel::I {
            [1, 1]
        } else {
            [1, -1]
        };
        Self {
            plus,
            minus,
            weights,
        }
    }

    pub fn general(beta: T, alpha: T) -> Self {
        Self {
            plus: axis_ket(beta, alpha, Outcome::Plus),
            minus: axis_ket(beta, alpha, Outcome::Minus),
            weights: [1, -1],
        }
    }

    pub fn ket(&self, o: Outcome) -> Ket2<T> {
        match o {
            Outcome::Plus => self.plus,
            Outcome::Minus => self.minus,
        }
    }

    /// `w+ |+><+| + w- |-><-|`.
    pub fn operator(&self) -> Operator2<T> {
        let p = Operator2::outer(&self.plus, &self.plus);
        let m = Operator2::outer(&self.minus, &self.minus);
        p.scale_real(T::lit(self.weights[0] as f64)) + m.scale_real(T::lit(self.weights[1] as f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObservableKind<T> {
    Pauli(PauliLabel, PauliLabel),
    GeneralAxis {
        beta1: T,
        alpha1: T,
        beta2: T,
        alpha2: T,
    },
}

/// A `+-1` valued local product observable `A_1 x A_2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable<T> {
    pub kind: ObservableKind<T>,
    /// Weights of the outcomes `++, +-, -+, --`.
    pub weights: [i8; 4],
}

impl<T: Real> Observable<T> {
    pub fn bases(&self) -> [LocalBasis<T>; 2] {
        match self.kind {
            ObservableKind::Pauli(a, b) => [LocalBasis::pauli(a), LocalBasis::pauli(b)],
            ObservableKind::GeneralAxis {
                beta1,
                alpha1,
                beta2,
                alpha2,
            } => [
                LocalBasis::general(beta1, alpha1),
                LocalBasis::general(beta2, alpha2),
            ],
        }
    }

    fn from_bases(kind: ObservableKind<T>, b: [LocalBasis<T>; 2]) -> Self {
        let w = |i: usize, j: usize| b[0].weights[i] * b[1].weights[j];
        Self {
            kind,
            weights: [w(0, 0), w(0, 1), w(1, 0), w(1, 1)],
        }
    }

    /// Two-qubit product kets in outcome order `++, +-, -+, --`.
    pub fn outcome_kets(&self) -> [[Complex<T>; 4]; 4] {
        let [b1, b2] = self.bases();
        [
            kron_vec(&b1.plus, &b2.plus),
            kron_vec(&b1.plus, &b2.minus),
            kron_vec(&b1.minus, &b2.plus),
            kron_vec(&b1.minus, &b2.minus),
        ]
    }

    pub fn operator(&self) -> Operator4<T> {
        let [b1, b2] = self.bases();
        b1.operator().kron(&b2.operator())
    }

    pub fn pauli_labels(&self) -> Option<(PauliLabel, PauliLabel)> {
        match self.kind {
            ObservableKind::Pauli(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            ObservableKind::Pauli(a, b) => format!("{a}{b}"),
            ObservableKind::GeneralAxis {
                beta1,
                alpha1,
                beta2,
                alpha2,
            } => format!(
                "axis({:.4},{:.4};{:.4},{:.4})",
                beta1.to_f64_lossy().to_degrees(),
                alpha1.to_f64_lossy().to_degrees(),
                beta2.to_f64_lossy().to_degrees(),
                alpha2.to_f64_lossy().to_degrees()
            ),
        }
    }

    /// `sum_k w_k p_k`.
    pub fn weighted(&self, probs: &[T; 4]) -> T {
        probs
            .iter()
            .zip(self.weights)
            .map(|(p, w)| *p * T::lit(w as f64))
            .sum()
    }
}

/// Product of Pauli operators with the weights implied by their eigenbases.
pub fn pauli_observable<T: Real>(a1: PauliLabel, a2: PauliLabel) -> Observable<T> {
    let kind = ObservableKind::Pauli(a1, a2);
    Observable::from_bases(kind, [LocalBasis::pauli(a1), LocalBasis::pauli(a2)])
}

/// Product of general-axis observables `|+><+| - |-><-|` per photon.
pub fn general_axis_observable<T: Real>(beta1: T, alpha1: T, beta2: T, alpha2: T) -> Observable<T> {
    let kind = ObservableKind::GeneralAxis {
        beta1,
        alpha1,
        beta2,
        alpha2,
    };
    Observable::from_bases(
        kind,
        [
            LocalBasis::general(beta1, alpha1),
            LocalBasis::general(beta2, alpha2),
        ],
    )
}

/// Probabilities of the outcomes `++, +-, -+, --`.
pub fn outcome_probabilities<T: Real>(state: &DensityMatrix<T>, obs: &Observable<T>) -> [T; 4] {
    obs.outcome_kets()
        .map(|k| state.sandwich(&k).max(T::zero()))
}

/// Coincidence counts of one setting over one acquisition window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    /// `N++, N+-, N-+, N--`.
    pub counts: [u64; 4],
    /// Acquisition time in seconds, stored as milliseconds to keep `Eq`.
    pub duration_ms: u64,
}

impl CountRecord {
    pub fn new(counts: [u64; 4], duration_s: f64) -> Self {
        Self {
            counts,
            duration_ms: (duration_s * 1000.0).round().max(0.0) as u64,
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration_ms as f64 / 1000.0
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `sum_k w_k N_k / sum_k N_k`; `None` if there are no counts.
    pub fn estimate(&self, weights: &[i8; 4]) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| {
            self.counts
                .iter()
                .zip(weights)
                .map(|(&c, &w)| c as f64 * w as f64)
                .sum::<f64>()
                / n as f64
        })
    }
}

fn validate_probs(probs: &[f64; 4]) -> Result<()> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < -1e-12) || (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(
            "probs",
            format!("must be a probability vector (sum {sum})"),
        ));
    }
    Ok(())
}

/// Draws `N_k ~ Poisson(rate * duration * p_k)` from a ChaCha8 stream seeded
/// with `seed`.
pub fn simulate_counts(
    probs: &[f64; 4],
    rate: f64,
    duration: f64,
    seed: u64,
) -> Result<CountRecord> {
    validate_probs(probs)?;
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(invalid("rate", "must be finite and non-negative"));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(invalid("duration", "must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    for (c, p) in counts.iter_mut().zip(probs) {
        let mean = rate * duration * p.max(0.0);
        if mean > 0.0 {
            let d = Poisson::new(mean).map_err(|e| invalid("rate", e.to_string()))?;
            *c = d.sample(&mut rng) as u64;
        }
    }
    Ok(CountRecord::new(counts, duration))
}

/// Expected (noise-free) counts, rounded to the nearest integer.
pub fn expected_counts(probs: &[f64; 4], rate: f64, duration: f64) -> CountRecord {
    CountRecord::new(
        probs.map(|p| (rate * duration * p.max(0.0)).round() as u64),
        duration,
    )
}

/// Polarization states appearing in the tomography table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
    D,
    A,
    L,
    R,
}

impl Pol {
    pub fn ket<T: Real>(self) -> Ket2<T> {
        let s = T::FRAC_1_SQRT_2();
        let r = |x: T| Complex::new(x, T::zero());
        let i = |x: T| Complex::new(T::zero(), x);
        match self {
            Pol::H => ket(1.0, 0.0),
            Pol::V => ket(0.0, 1.0),
            Pol::D => [r(s), r(s)],
            Pol::A => [r(s), r(-s)],
            Pol::L => [r(s), i(s)],
            Pol::R => [r(s), i(-s)],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pol::H => 'H',
            Pol::V => 'V',
            Pol::D => 'D',
            Pol::A => 'A',
            Pol::L => 'L',
            Pol::R => 'R',
        }
    }
}

/// One two-photon projector of the tomography set with its lab waveplate
/// angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographySetting {
    pub p1: Pol,
    pub p2: Pol,
    pub h1: f64,
    pub q1: f64,
    pub h2: f64,
    pub q2: f64,
}

impl TomographySetting {
    pub fn label(&self) -> String {
        format!("{}{}", self.p1.symbol(), self.p2.symbol())
    }

    pub fn ket<T: Real>(&self) -> [Complex<T>; 4] {
        kron_vec(&self.p1.ket(), &self.p2.ket())
    }
}

/// The 16 tomography projectors in their standard order.
pub fn tomography_settings() -> [TomographySetting; 16] {
    use Pol::*;
    let rows: [(Pol, Pol, f64, f64, f64, f64); 16] = [
        (V, V, 45.0, 0.0, 45.0, 0.0),
        (V, H, 45.0, 0.0, 0.0, 0.0),
        (H, H, 0.0, 0.0, 0.0, 0.0),
        (H, V, 0.0, 0.0, 45.0, 0.0),
        (L, V, -22.5, 0.0, 45.0, 0.0),
        (L, H, -22.5, 0.0, 0.0, 0.0),
        (D, H, -22.5, 45.0, 0.0, 0.0),
        (D, V, -22.5, 45.0, 45.0, 0.0),
        (D, L, -22.5, 45.0, -22.5, 0.0),
        (D, D, -22.5, 45.0, -22.5, 45.0),
        (L, D, -22.5, 0.0, -22.5, 45.0),
        // Printed elsewhere as h2 = 45, which analyzes R rather than D.
        (V, D, 45.0, 0.0, -22.5, 45.0),
        (H, D, 0.0, 0.0, -22.5, 45.0),
        (H, R, 0.0, 0.0, 22.5, 0.0),
        (V, R, 45.0, 0.0, 22.5, 0.0),
        (L, R, -22.5, 0.0, 22.5, 0.0),
    ];
    rows.map(|(p1, p2, h1, q1, h2, q2)| TomographySetting {
        p1,
        p2,
        h1,
        q1,
        h2,
        q2,
    })
}

/// `|<H| HWP(h) QWP(q) |psi>|^2` for lab angles in degrees.
pub fn transmission(h_deg: f64, q_deg: f64, psi: &Ket2<f64>) -> f64 {
    let out = analyzer_jones(h_deg, q_deg).apply(psi);
    out[0].norm_sqr() / inner(psi, psi).re
}

/// Waveplate pair (lab degrees) that routes one projector state to the
/// transmitted port.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSetting {
    pub hwp_deg: f64,
    pub qwp_deg: f64,
    pub outcome: Outcome,
    /// `1 - |<H|HWP QWP|psi>|^2` at the returned angles.
    pub residual: f64,
}

/// Residual above which a waveplate solution is rejected.
pub const WAVEPLATE_RESIDUAL_MAX: f64 = 1e-8;

fn normalize_deg(x: f64) -> f64 {
    // Both waveplates have period 180 degrees; map into (-90, 90].
    let mut y = x % 180.0;
    if y <= -90.0 {
        y += 180.0;
    } else if y > 90.0 {
        y -= 180.0;
    }
    y
}

fn prefer(a: (f64, f64), b: (f64, f64)) -> bool {
    // true if `a` should replace `b`
    let (ca, cb) = (a.0.abs() + a.1.abs(), b.0.abs() + b.1.abs());
    if (ca - cb).abs() > 1e-6 {
        return ca < cb;
    }
    let rank = |p: (f64, f64)| (p.0 >= -1e-9) as u8 * 2 + (p.1 >= -1e-9) as u8;
    rank(a) > rank(b)
}

/// Minimizes `1 - |<H| HWP(h) QWP(q) |psi>|^2` from an 8 x 8 grid of starts
/// and returns the valid solution with the smallest `|h| + |q|`, ties going to
/// non-negative angles.
pub fn solve_waveplates_for_ket(psi: &Ket2<f64>, outcome: Outcome) -> Result<ProjectorSetting> {
    let objective = |x: &[f64]| 1.0 - transmission(x[0], x[1], psi);
    let opts = NelderMeadOptions {
        max_iter: 2000,
        f_tol: 1e-16,
        x_tol: 1e-9,
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let mut best_residual = f64::INFINITY;
    for i in 0..8 {
        for j in 0..8 {
            let h0 = -90.0 + 180.0 * (i as f64 + 0.5) / 8.0;
            let q0 = -90.0 + 180.0 * (j as f64 + 0.5) / 8.0;
            let m = nelder_mead(objective, &[h0, q0], &[7.5, 7.5], opts);
            best_residual = best_residual.min(m.fx);
            if m.fx > WAVEPLATE_RESIDUAL_MAX {
                continue;
            }
            let cand = (normalize_deg(m.x[0]), normalize_deg(m.x[1]));
            let res = objective(&[cand.0, cand.1]).max(0.0);
            match best {
                Some((h, q, _)) if !prefer(cand, (h, q)) => {}
                _ => best = Some((cand.0, cand.1, res)),
            }
        }
    }
    match best {
        Some((h, q, residual)) => Ok(ProjectorSetting {
            hwp_deg: h,
            qwp_deg: q,
            outcome,
            residual,
        }),
        None => Err(Error::NoConvergence {
            what: "waveplate solver",
            best: best_residual,
            grad_norm: f64::NAN,
        }),
    }
}

/// Waveplates for the general-axis projector `|beta, alpha, +/->`.
pub fn solve_projector_waveplates(
    beta: f64,
    alpha: f64,
    outcome: Outcome,
) -> Result<ProjectorSetting> {
    solve_waveplates_for_ket(&axis_ket(beta, alpha, outcome), outcome)
}

/// Waveplate settings `[photon][outcome]` realizing every projector of `obs`.
pub fn observable_settings(obs: &Observable<f64>) -> Result<[[ProjectorSetting; 2]; 2]> {
    let bases = obs.bases();
    let solve = |b: &LocalBasis<f64>| -> Result<[ProjectorSetting; 2]> {
        Ok([
            solve_waveplates_for_ket(&b.plus, Outcome::Plus)?,
            solve_waveplates_for_ket(&b.minus, Outcome::Minus)?,
        ])
    };
    Ok([solve(&bases[0])?, solve(&bases[1])?])
}
