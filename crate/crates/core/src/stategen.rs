//! State preparation: the interferometric pipeline that produces the weighted
//! graph state, the ideal target state, and a simple noise channel.
//!
//! The pipeline works in an 8-dimensional space ordered
//! `(photon-1 polarization) x (photon-2 path: r2, l2) x (photon-2 polarization)`.
//! Starting from `(|HH> - |VV>)/sqrt 2`, a PBS routes photon 2 (`H -> r2`,
//! `V -> l2`), each arm applies a half-wave plate, arm `l2` applies
//! `R_z(phi'_12)`, arm `r2` picks up `exp(-i phi')`, and a 50:50 beam splitter
//! maps `r2 -> (p2 + q2)/sqrt 2`, `l2 -> (p2 - q2)/sqrt 2`. Only detections in
//! `p2` are kept.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::error::{invalid, Error, Result};
use crate::optics::{hwp, rotation, Axis};
use crate::qmath::{DensityMatrix, Operator2, Operator4, PureState2Q};
use crate::scalar::{wrap_angle, Real};

/// Post-selection probabilities below this are treated as a dark port.
pub const POSTSELECT_FLOOR: f64 = 1e-12;

/// Number of deterministic jitter nodes used by [`apply_noise`].
pub const DEFAULT_JITTER_NODES: usize = 201;

/// Settings of the optical elements in the two interferometer arms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig<T> {
    /// HWP angle in arm r2 (radians, internal convention).
    pub hwp_r2: T,
    /// HWP angle in arm l2.
    pub hwp_l2: T,
    /// `R_z` rotation angle in arm l2.
    pub phi_prime_12: T,
    /// Path phase difference `phi_r2 - phi_l2`, with `phi_l2 = 0`.
    pub varphi_prime: T,
}

impl<T: Real> GenerationConfig<T> {
    /// Settings that produce the weighted graph state of weight `phi12`:
    /// both HWPs at 22.5 degrees, `phi'_12 = phi12 - pi` and the MZI phase from
    /// [`mzi_phase_condition`].
    pub fn canonical(phi12: T) -> Self {
        Self {
            hwp_r2: T::PI() / T::lit(8.0),
            hwp_l2: T::PI() / T::lit(8.0),
            phi_prime_12: phi12 - T::PI(),
            varphi_prime: mzi_phase_condition(phi12),
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.hwp_r2,
            self.hwp_l2,
            self.phi_prime_12,
            self.varphi_prime,
        ];
        if all.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(invalid("GenerationConfig", "angles must be finite"))
        }
    }
}

/// Post-selected output of the pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationResult<T> {
    pub state: PureState2Q<T>,
    pub postselect_probability: T,
}

/// `(1, 1, 1, e^{i phi12}) / 2`.
pub fn weighted_graph_state<T: Real>(phi12: T) -> PureState2Q<T> {
    let h = Complex::new(T::lit(0.5), T::zero());
    PureState2Q::new([h, h, h, Complex::from_polar(T::lit(0.5), phi12)])
        .expect("graph state has unit norm")
}

/// MZI phase `(phi12 - pi)/2 - pi` wrapped to `(-pi, pi]`.
pub fn mzi_phase_condition<T: Real>(phi12: T) -> T {
    wrap_angle((phi12 - T::PI()) * T::lit(0.5) - T::PI())
}

/// `(|HH> - e^{i phi'} |VH>) / sqrt 2`, the state used for fringe scans.
pub fn fringe_state<T: Real>(varphi_prime: T) -> PureState2Q<T> {
    let s = T::FRAC_1_SQRT_2();
    let z = Complex::new(T::zero(), T::zero());
    PureState2Q::new([
        Complex::new(s, T::zero()),
        z,
        -Complex::from_polar(s, varphi_prime),
        z,
    ])
    .expect("fringe state has unit norm")
}

#[inline]
fn idx(pol1: usize, path: usize, pol2: usize) -> usize {
    pol1 * 4 + path * 2 + pol2
}

/// Propagates the source state through the pipeline and post-selects port p2.
pub fn simulate_generation<T: Real>(cfg: &GenerationConfig<T>) -> Result<GenerationResult<T>> {
    cfg.validate()?;
    let zero = Complex::new(T::zero(), T::zero());
    let s = T::FRAC_1_SQRT_2();

    // Source (|HH> - |VV>)/sqrt 2 followed by the PBS: H2 -> r2, V2 -> l2.
    let mut psi = [zero; 8];
    psi[idx(0, 0, 0)] = Complex::new(s, T::zero());
    psi[idx(1, 1, 1)] = Complex::new(-s, T::zero());

    let arm_r: Operator2<T> =
        hwp(cfg.hwp_r2).scale(Complex::from_polar(T::one(), -cfg.varphi_prime));
    let arm_l: Operator2<T> = rotation(Axis::Z, cfg.phi_prime_12) * hwp(cfg.hwp_l2);
    for pol1 in 0..2 {
        for (path, op) in [(0, &arm_r), (1, &arm_l)] {
            let v = [psi[idx(pol1, path, 0)], psi[idx(pol1, path, 1)]];
            let w = op.apply(&v);
            psi[idx(pol1, path, 0)] = w[0];
            psi[idx(pol1, path, 1)] = w[1];
        }
    }

    // Port p2 amplitude: (r2 + l2)/sqrt 2.
    let mut out = [zero; 4];
    for pol1 in 0..2 {
        for pol2 in 0..2 {
            out[pol1 * 2 + pol2] = (psi[idx(pol1, 0, pol2)] + psi[idx(pol1, 1, pol2)]).scale(s);
        }
    }
    let prob: T = out.iter().map(|a| a.norm_sqr()).sum();
    if !(prob >= T::lit(POSTSELECT_FLOOR)) {
        return Err(Error::DegeneratePostSelection(prob.to_f64_lossy()));
    }
    Ok(GenerationResult {
        state: PureState2Q::new(out)?,
        postselect_probability: prob,
    })
}

/// How the Gaussian phase jitter is averaged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum JitterSampling {
    /// Equal-weight nodes at the midpoint quantiles `(k + 1/2)/n` of the
    /// normal law. Deterministic; the seed is ignored.
    Quantiles(usize),
    /// `n` pseudo-random draws from a seeded ChaCha8 stream.
    MonteCarlo(usize),
}

/// Depolarizing noise plus Gaussian jitter of the MZI phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel<T> {
    pub depolarizing_p: T,
    pub phase_jitter_sigma: T,
    pub sampling: JitterSampling,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(depolarizing_p: T, phase_jitter_sigma: T) -> Result<Self> {
        let nm = Self {
            depolarizing_p,
            phase_jitter_sigma,
            sampling: JitterSampling::Quantiles(DEFAULT_JITTER_NODES),
        };
        nm.validate()?;
        Ok(nm)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.depolarizing_p;
        if !(p >= T::zero() && p <= T::one()) {
            return Err(invalid("depolarizing_p", "must lie in [0, 1]"));
        }
        if !(self.phase_jitter_sigma >= T::zero()) || !self.phase_jitter_sigma.is_finite() {
            return Err(invalid(
                "phase_jitter_sigma",
                "must be finite and non-negative",
            ));
        }
        match self.sampling {
            JitterSampling::Quantiles(0) | JitterSampling::MonteCarlo(0) => {
                Err(invalid("sampling", "needs at least one node"))
            }
            _ => Ok(()),
        }
    }

    /// Depolarizing strength giving fidelity `f` with the pure input when
    /// there is no jitter: `F = 1 - 3p/4`.
    pub fn depolarizing_for_fidelity(f: T) -> T {
        (T::one() - f) * T::lit(4.0) / T::lit(3.0)
    }
}

fn jitter_offsets(sigma: f64, sampling: JitterSampling, seed: u64) -> Vec<f64> {
    match sampling {
        JitterSampling::Quantiles(n) => {
            let std = StdNormal::new(0.0, 1.0).expect("unit normal");
            (0..n)
                .map(|k| sigma * std.inverse_cdf((k as f64 + 0.5) / n as f64))
                .collect()
        }
        JitterSampling::MonteCarlo(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            (0..n).map(|_| normal.sample(&mut rng)).collect()
        }
    }
}

/// Mixes `state` with jittered copies and white noise:
/// `rho = (1 - p) <|psi(phi' + d)><psi(phi' + d)|>_d + p I/4`.
///
/// A shift `d` of the MZI phase acts on the pipeline output as
/// `diag(1, e^{i d})` on photon 1 (up to global phase), which is how the
/// jitter is applied to an arbitrary input.
pub fn apply_noise<T: Real>(
    state: &PureState2Q<T>,
    nm: &NoiseModel<T>,
    rng_seed: u64,
) -> Result<DensityMatrix<T>> {
    nm.validate()?;
    let pure = if nm.phase_jitter_sigma > T::zero() {
        let offsets = jitter_offsets(nm.phase_jitter_sigma.to_f64_lossy(), nm.sampling, rng_seed);
        let w = T::one() / T::lit(offsets.len() as f64);
        let mut acc = Operator4::<T>::zeros();
        for d in offsets {
            let phase = Operator2::diag([
                Complex::new(T::one(), T::zero()),
                Complex::from_polar(T::one(), T::lit(d)),
            ]);
            let u = phase.kron(&Operator2::identity());
            acc = acc + state.evolve(&u)?.projector().scale_real(w);
        }
        acc
    } else {
        state.projector()
    };
    let p = nm.depolarizing_p;
    let m = pure.scale_real(T::one() - p) + Operator4::identity().scale_real(p * T::lit(0.25));
    DensityMatrix::new(m)
}
