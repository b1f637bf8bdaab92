//! Sixteen-projector two-qubit tomography: count simulation, maximum-likelihood
//! reconstruction over `rho = L L^dagger / tr(L L^dagger)` and Poisson Monte
//! Carlo error bars.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measurement::{tomography_settings, PauliLabel};
use crate::optimize::{bfgs, BfgsOptions};
use crate::qmath::decomp::{cholesky, solve_real, HermitianEigen};
use crate::qmath::{
    concurrence, fidelity, pauli, DensityMatrix, Operator2, Operator4, PureState2Q,
};

pub const N_SETTINGS: usize = 16;
/// Monte Carlo sample count used when none is given.
pub const DEFAULT_MC_SAMPLES: usize = 100;
/// Settings 1-4 (`VV, VH, HH, HV`) partition unity and fix the normalization.
const RECTILINEAR: [usize; 4] = [0, 1, 2, 3];

/// Counts of one tomography setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    /// Coincidences; fractional in exact mode.
    pub counts: f64,
    /// Seconds.
    pub duration: f64,
}

/// Records aligned with `tomography_settings()`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyDataset {
    pub records: [TomographyRecord; N_SETTINGS],
}

impl TomographyDataset {
    pub fn new(records: [TomographyRecord; N_SETTINGS]) -> Result<Self> {
        for r in &records {
            if !(r.counts.is_finite() && r.counts >= 0.0) {
                return Err(invalid("counts", "must be finite and non-negative"));
            }
            if !(r.duration.is_finite() && r.duration >= 0.0) {
                return Err(invalid("duration", "must be finite and non-negative"));
            }
        }
        Ok(Self { records })
    }

    pub fn from_counts(counts: [f64; N_SETTINGS], duration: f64) -> Result<Self> {
        Self::new(counts.map(|counts| TomographyRecord { counts, duration }))
    }

    pub fn counts(&self) -> [f64; N_SETTINGS] {
        self.records.map(|r| r.counts)
    }

    pub fn total(&self) -> f64 {
        self.records.iter().map(|r| r.counts).sum()
    }

    /// `N = sum` of the rectilinear settings.
    pub fn normalization(&self) -> f64 {
        RECTILINEAR.iter().map(|&i| self.records[i].counts).sum()
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.records.map(|r| TomographyRecord {
            counts: r.counts * k,
            ..r
        }))
    }
}

fn projector_kets() -> [[Complex<f64>; 4]; N_SETTINGS] {
    tomography_settings().map(|s| s.ket())
}

/// Probability of each tomography projector.
pub fn setting_probabilities(state: &DensityMatrix<f64>) -> [f64; N_SETTINGS] {
    projector_kets().map(|k| state.sandwich(&k).clamp(0.0, 1.0))
}

/// Expected counts `rate * duration * p` per setting, or Poisson draws from a
/// single ChaCha8 stream when `poisson` is set.
pub fn simulate_tomography(
    state: &DensityMatrix<f64>,
    rate: f64,
    duration: f64,
    seed: u64,
    poisson: bool,
) -> Result<TomographyDataset> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(invalid("rate", "must be finite and non-negative"));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(invalid("duration", "must be finite and non-negative"));
    }
    let means = setting_probabilities(state).map(|p| rate * duration * p);
    let counts = if poisson {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = [0.0; N_SETTINGS];
        for (o, m) in out.iter_mut().zip(means) {
            *o = poisson_draw(m, &mut rng)?;
        }
        out
    } else {
        means
    };
    TomographyDataset::from_counts(counts, duration)
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if mean <= 0.0 {
        return Ok(0.0);
    }
    let d = Poisson::new(mean).map_err(|e| invalid("rate", e.to_string()))?;
    Ok(d.sample(rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Likelihood {
    /// Gaussian with variance equal to the expected count.
    Gaussian,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub likelihood: Likelihood,
    pub max_iter: usize,
    /// Gradient norm (on frequencies normalized by `N`) accepted as converged.
    pub grad_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            likelihood: Likelihood::Gaussian,
            max_iter: 5000,
            grad_tol: 1e-6,
        }
    }
}

fn pauli2(l: PauliLabel) -> Operator2<f64> {
    match l {
        PauliLabel::I => pauli::i(),
        PauliLabel::X => pauli::x(),
        PauliLabel::Y => pauli::y(),
        PauliLabel::Z => pauli::z(),
    }
}

fn pauli_basis() -> Vec<Operator4<f64>> {
    let mut out = Vec::with_capacity(16);
    for a in PauliLabel::ALL {
        for b in PauliLabel::ALL {
            out.push(pauli2(a).kron(&pauli2(b)));
        }
    }
    out
}

/// Unconstrained linear inversion `f_i = tr(P_i rho)`; may be unphysical.
pub fn linear_inversion(freqs: &[f64; N_SETTINGS]) -> Result<Operator4<f64>> {
    let basis = pauli_basis();
    let kets = projector_kets();
    let a: Vec<Vec<f64>> = kets
        .iter()
        .map(|k| {
            basis
                .iter()
                .map(|s| {
                    let sk = s.apply(k);
                    k.iter()
                        .zip(sk)
                        .map(|(x, y)| (x.conj() * y).re)
                        .sum::<f64>()
                        / 4.0
                })
                .collect()
        })
        .collect();
    let c = solve_real(&a, freqs).ok_or(Error::DegenerateData(
        "tomography settings are singular".into(),
    ))?;
    Ok(basis
        .iter()
        .zip(c)
        .fold(Operator4::zeros(), |acc, (s, ck)| {
            acc + s.scale_real(ck / 4.0)
        }))
}

/// Nearest full-rank physical start: clip the spectrum, renormalize and mix in
/// a little of the identity.
fn physical_start(m: &Operator4<f64>) -> Operator4<f64> {
    let eig = HermitianEigen::new(m);
    let clipped = eig.map(|v| v.max(0.0));
    let tr = clipped.trace().re;
    let base = if tr > 1e-12 {
        clipped.scale_real(1.0 / tr)
    } else {
        Operator4::identity().scale_real(0.25)
    };
    base.scale_real(0.98) + Operator4::identity().scale_real(0.005)
}

const OFF_DIAG: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

fn pack(l: &Operator4<f64>) -> Vec<f64> {
    let mut x: Vec<f64> = (0..4).map(|i| l[(i, i)].re).collect();
    for (a, b) in OFF_DIAG {
        x.push(l[(a, b)].re);
        x.push(l[(a, b)].im);
    }
    x
}

fn unpack(x: &[f64]) -> Operator4<f64> {
    let mut l = Operator4::zeros();
    for i in 0..4 {
        l[(i, i)] = Complex::new(x[i], 0.0);
    }
    for (k, (a, b)) in OFF_DIAG.iter().enumerate() {
        l[(*a, *b)] = Complex::new(x[4 + 2 * k], x[5 + 2 * k]);
    }
    l
}

fn rho_of(l: &Operator4<f64>) -> (Operator4<f64>, f64) {
    let llh = *l * l.adjoint();
    let t = llh.trace().re;
    (llh.scale_real(1.0 / t), t)
}

/// Negative log-likelihood of the normalized frequencies and its gradient in
/// the 16 real parameters of `L`.
fn objective(
    x: &[f64],
    freqs: &[f64; N_SETTINGS],
    projectors: &[Operator4<f64>],
    likelihood: Likelihood,
) -> (f64, Vec<f64>) {
    const P_FLOOR: f64 = 1e-14;
    let l = unpack(x);
    let (rho, t) = rho_of(&l);
    if !(t > 0.0 && t.is_finite()) {
        return (f64::INFINITY, vec![0.0; 16]);
    }
    let mut value = 0.0;
    let mut g = Operator4::zeros();
    for (p_op, &f) in projectors.iter().zip(freqs) {
        let p = (p_op.mul_trace(&rho)).max(P_FLOOR);
        let (v, dv) = match likelihood {
            Likelihood::Gaussian => ((p - f).powi(2) / (2.0 * p), (p * p - f * f) / (2.0 * p * p)),
            Likelihood::Poisson => (p - if f > 0.0 { f * p.ln() } else { 0.0 }, 1.0 - f / p),
        };
        value += v;
        g = g + p_op.scale_real(dv);
    }
    // dF = 2 Re tr(L^dagger G' dL), G' = (G - tr(G rho)) / t.
    let gp = (g - Operator4::identity().scale_real(g.mul_trace(&rho))).scale_real(1.0 / t);
    let xm = l.adjoint() * gp;
    let mut grad: Vec<f64> = (0..4).map(|i| 2.0 * xm[(i, i)].re).collect();
    for (a, b) in OFF_DIAG {
        grad.push(2.0 * xm[(b, a)].re);
        grad.push(-2.0 * xm[(b, a)].im);
    }
    (value, grad)
}

trait MulTrace {
    fn mul_trace(&self, other: &Self) -> f64;
}

impl MulTrace for Operator4<f64> {
    /// `Re tr(self * other)` without forming the product.
    fn mul_trace(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += (self[(i, j)] * other[(j, i)]).re;
            }
        }
        s
    }
}

/// Maximum-likelihood density matrix with the default options.
pub fn mle_reconstruct(data: &TomographyDataset) -> Result<DensityMatrix<f64>> {
    mle_reconstruct_with(data, &MleOptions::default())
}

pub fn mle_reconstruct_with(
    data: &TomographyDataset,
    opts: &MleOptions,
) -> Result<DensityMatrix<f64>> {
    if data.total() <= 0.0 {
        return Err(Error::DegenerateData(
            "all tomography counts are zero".into(),
        ));
    }
    let n = data.normalization();
    if n <= 0.0 {
        return Err(Error::DegenerateData(
            "rectilinear settings have no counts; normalization undefined".into(),
        ));
    }
    let freqs = data.counts().map(|c| c / n);
    let projectors: Vec<Operator4<f64>> = projector_kets()
        .iter()
        .map(|k| Operator4::outer(k, k))
        .collect();

    let start = linear_inversion(&freqs)
        .map(|m| physical_start(&m))
        .unwrap_or_else(|_| Operator4::identity().scale_real(0.25));
    let starts = [start, Operator4::identity().scale_real(0.25)];
    let bopts = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol * 1e-2,
        f_tol: 1e-15,
    };
    let fg = |x: &[f64]| objective(x, &freqs, &projectors, opts.likelihood);
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for s in starts {
        let l0 = cholesky(&s).ok_or(Error::NotPositive(0.0))?;
        // Restart once from the end point to refresh the inverse Hessian.
        let first = bfgs(fg, &pack(&l0), bopts);
        let second = bfgs(fg, &first.x, bopts);
        let m = if second.fx <= first.fx { second } else { first };
        if best.as_ref().is_none_or(|b| m.fx < b.1) {
            best = Some((m.x.clone(), m.fx, m.grad_norm));
        }
        if m.grad_norm <= opts.grad_tol {
            break;
        }
    }
    let (x, fx, grad_norm) = best.expect("at least one start");
    if !(grad_norm <= opts.grad_tol) {
        return Err(Error::NoConvergence {
            what: "maximum-likelihood reconstruction",
            best: fx,
            grad_norm,
        });
    }
    let (rho, _) = rho_of(&unpack(&x));
    // Hermitian and unit trace by construction; symmetrize away round-off.
    let sym = (rho + rho.adjoint()).scale_real(0.5);
    let tr = sym.trace().re;
    Ok(DensityMatrix::new_unchecked(sym.scale_real(1.0 / tr)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Value for the reconstruction of the observed data.
    pub value: f64,
    pub mc_mean: f64,
    pub mc_std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    pub rho: DensityMatrix<f64>,
    pub fidelity: Estimate,
    pub concurrence: Estimate,
    pub mc_samples: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Reconstructs the data, then `n` Poisson resamplings of it (mean = observed
/// count). Sample `k` draws from the ChaCha8 stream `k` of the master `seed`,
/// so results do not depend on thread scheduling.
pub fn monte_carlo_report(
    data: &TomographyDataset,
    target: &PureState2Q<f64>,
    n: usize,
    seed: u64,
) -> Result<ReconstructionReport> {
    monte_carlo_report_with(data, target, n, seed, &MleOptions::default())
}

pub fn monte_carlo_report_with(
    data: &TomographyDataset,
    target: &PureState2Q<f64>,
    n: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<ReconstructionReport> {
    if n < 2 {
        return Err(invalid("n", "need at least 2 Monte Carlo samples"));
    }
    let rho = mle_reconstruct_with(data, opts)?;
    let samples: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut records = data.records;
            for r in records.iter_mut() {
                r.counts = poisson_draw(r.counts, &mut rng)?;
            }
            let sample = mle_reconstruct_with(&TomographyDataset::new(records)?, opts)?;
            Ok((fidelity(&sample, target), concurrence(&sample)))
        })
        .collect::<Result<_>>()?;
    let (fs, cs): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    let (fm, fsd) = mean_std(&fs);
    let (cm, csd) = mean_std(&cs);
    Ok(ReconstructionReport {
        fidelity: Estimate {
            value: fidelity(&rho, target),
            mc_mean: fm,
            mc_std: fsd,
        },
        concurrence: Estimate {
            value: concurrence(&rho),
            mc_mean: cm,
            mc_std: csd,
        },
        rho,
        mc_samples: n,
    })
}
