//! Phase encoding `U(theta) = R_x(theta) x R_z(theta)`, estimator variance of
//! local observables, quantum Fisher information and the two searches for an
//! optimal measurement.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measurement::{general_axis_observable, pauli_observable, Observable, PauliLabel};
use crate::optics::{rotation, Axis};
use crate::optimize::{differential_evolution, nelder_mead, DeOptions, NelderMeadOptions};
use crate::qmath::{pauli, DensityMatrix, Operator4, PureState2Q};
use crate::scalar::Real;
use crate::stategen::weighted_graph_state;

/// Standard quantum limit for two probes.
pub const SQL: f64 = 0.5;
/// Heisenberg limit for two probes.
pub const HL: f64 = 0.25;

/// `(SQL, HL)` for `N = 2`.
pub fn limits() -> (f64, f64) {
    (SQL, HL)
}

pub fn encoding_unitary<T: Real>(theta: T) -> Operator4<T> {
    rotation(Axis::X, theta).kron(&rotation(Axis::Z, theta))
}

/// `H = (X x 1 + 1 x Z) / 2`, the generator of `encoding_unitary`.
pub fn generator<T: Real>() -> Operator4<T> {
    let a = pauli::x::<T>().kron(&pauli::i());
    let b = pauli::i::<T>().kron(&pauli::z());
    (a + b).scale_real(T::lit(0.5))
}

pub fn qfi_closed_form<T: Real>(phi12: T) -> T {
    let c = phi12.cos();
    (T::lit(11.0) - T::lit(6.0) * c - c * c) / T::lit(4.0)
}

/// `4 (<H^2> - <H>^2)` for a pure state.
pub fn qfi_numeric<T: Real>(state: &PureState2Q<T>) -> T {
    let h = generator::<T>();
    let m1 = state.expectation_unchecked(&h).re;
    let m2 = state.expectation_unchecked(&(h * h)).re;
    T::lit(4.0) * (m2 - m1 * m1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig<T> {
    /// Operating point `theta*`.
    pub theta_star: T,
    /// Finite-difference shift.
    pub h: T,
    /// Derivative magnitudes below this are reported as `ZeroDerivative`.
    pub derivative_floor: T,
}

impl<T: Real> Default for SensingConfig<T> {
    fn default() -> Self {
        Self {
            theta_star: T::zero(),
            h: T::lit(5f64.to_radians()),
            derivative_floor: T::lit(1e-9),
        }
    }
}

impl<T: Real> SensingConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.theta_star.is_finite() {
            return Err(invalid("theta_star", "must be finite"));
        }
        if !(self.h > T::zero() && self.h.is_finite()) {
            return Err(invalid("h", "must be positive"));
        }
        if !(self.derivative_floor >= T::zero()) {
            return Err(invalid("derivative_floor", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingResult<T> {
    pub expectation: T,
    /// Signed slope `d<A>/dtheta` at `theta*`.
    pub derivative: T,
    pub derivative_magnitude: T,
    pub single_shot_variance: T,
    pub estimator_variance: T,
}

impl<T: Real> SensingResult<T> {
    fn assemble(expectation: T, derivative: T, floor: T) -> Result<Self> {
        let d = derivative.abs();
        if d < floor || !d.is_finite() {
            return Err(Error::ZeroDerivative(d.to_f64_lossy()));
        }
        let var = (T::one() - expectation * expectation).max(T::zero());
        Ok(Self {
            expectation,
            derivative,
            derivative_magnitude: d,
            single_shot_variance: var,
            estimator_variance: var / (d * d),
        })
    }
}

/// `<A>` after encoding `theta`.
pub fn encoded_expectation<T: Real>(rho: &DensityMatrix<T>, obs: &Observable<T>, theta: T) -> T {
    let r = rho.evolve(&encoding_unitary(theta));
    obs.weighted(&crate::measurement::outcome_probabilities(&r, obs))
}

/// Precomputed `rho(theta*)` and `i [rho, H]`; both `<A>` and its slope are
/// weighted sums of sandwiches with product kets.
struct Probe<T> {
    rho: Operator4<T>,
    slope: Operator4<T>,
}

impl<T: Real> Probe<T> {
    fn new(rho: &DensityMatrix<T>, theta: T) -> Self {
        let r = *rho.evolve(&encoding_unitary(theta)).matrix();
        let h = generator::<T>();
        let slope = (r * h - h * r).scale(Complex::new(T::zero(), T::one()));
        Self { rho: r, slope }
    }

    fn eval(&self, obs: &Observable<T>) -> (T, T) {
        let kets = obs.outcome_kets();
        let mut e = T::zero();
        let mut d = T::zero();
        for (k, w) in kets.iter().zip(obs.weights) {
            let w = T::lit(w as f64);
            e = e + w * sandwich(&self.rho, k);
            d = d + w * sandwich(&self.slope, k);
        }
        (e, d)
    }
}

fn sandwich<T: Real>(m: &Operator4<T>, v: &[Complex<T>; 4]) -> T {
    let mv = m.apply(v);
    v.iter().zip(mv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Expectation, slope and estimator variance of `obs` at `theta*`.
pub fn sense<T: Real>(
    rho: &DensityMatrix<T>,
    obs: &Observable<T>,
    cfg: &SensingConfig<T>,
    mode: DerivativeMode,
) -> Result<SensingResult<T>> {
    cfg.validate()?;
    let (e, d) = Probe::new(rho, cfg.theta_star).eval(obs);
    let d = match mode {
        DerivativeMode::Analytic => d,
        DerivativeMode::FiniteDifference => {
            let ep = encoded_expectation(rho, obs, cfg.theta_star + cfg.h);
            let em = encoded_expectation(rho, obs, cfg.theta_star - cfg.h);
            (ep - em) / (T::lit(2.0) * cfg.h)
        }
    };
    SensingResult::assemble(e, d, cfg.derivative_floor)
}

/// Order in which Pauli products are enumerated; the first of several exactly
/// tied optima is kept.
pub const PAULI_SEARCH_ORDER: [(PauliLabel, PauliLabel); 16] = {
    use PauliLabel::*;
    let q2 = [Y, Z, X, I];
    let q1 = [I, Z, Y, X];
    let mut out = [(I, I); 16];
    let mut k = 0;
    while k < 16 {
        out[k] = (q1[k % 4], q2[k / 4]);
        k += 1;
    }
    out
};

/// Variances closer than this count as tied in the Pauli search.
pub const PAULI_TIE_TOLERANCE: f64 = 1e-9;

/// Exhaustive search over the 16 Pauli products: minimal `(dtheta)^2`, ties
/// resolved by the larger slope.
pub fn pauli_search<T: Real>(
    phi12: T,
    cfg: &SensingConfig<T>,
) -> Result<(Observable<T>, SensingResult<T>)> {
    cfg.validate()?;
    let rho = weighted_graph_state(phi12).to_density();
    let probe = Probe::new(&rho, cfg.theta_star);
    let tie = T::lit(PAULI_TIE_TOLERANCE);
    let mut best: Option<(Observable<T>, SensingResult<T>)> = None;
    for (a, b) in PAULI_SEARCH_ORDER {
        let obs = pauli_observable(a, b);
        let (e, d) = probe.eval(&obs);
        let Ok(r) = SensingResult::assemble(e, d, cfg.derivative_floor) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((_, cur)) => {
                r.estimator_variance < cur.estimator_variance - tie
                    || ((r.estimator_variance - cur.estimator_variance).abs() <= tie
                        && r.derivative_magnitude > cur.derivative_magnitude + tie)
            }
        };
        if better {
            best = Some((obs, r));
        }
    }
    best.ok_or(Error::ZeroDerivative(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Weight of the soft penalty `penalty_weight / |d<A>/dtheta|`.
    pub penalty_weight: f64,
    pub de_population: usize,
    pub de_generations: usize,
    pub refine: bool,
    /// Half-width (radians) of the box sampled around the optimum.
    pub neighborhood_radius: f64,
    /// Neighbourhood points within this of the best variance compete on slope.
    pub variance_tolerance: f64,
    pub neighborhood_samples: usize,
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            penalty_weight: 0.033,
            de_population: 40,
            de_generations: 300,
            refine: true,
            neighborhood_radius: 2f64.to_radians(),
            variance_tolerance: 1e-4,
            neighborhood_samples: 4000,
            parallel: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return Err(invalid("penalty_weight", "must be finite and non-negative"));
        }
        if self.de_population < 8 {
            return Err(invalid("de_population", "must be at least 8"));
        }
        if self.de_generations == 0 {
            return Err(invalid("de_generations", "must be positive"));
        }
        if !(self.variance_tolerance > 0.0) {
            return Err(invalid("variance_tolerance", "must be positive"));
        }
        if !(self.neighborhood_radius >= 0.0 && self.neighborhood_radius.is_finite()) {
            return Err(invalid(
                "neighborhood_radius",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Best general-axis measurement with the search diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSearchOutcome {
    pub observable: Observable<f64>,
    pub result: SensingResult<f64>,
    /// `(beta1, alpha1, beta2, alpha2)` in radians.
    pub angles: [f64; 4],
    /// Penalized objective at the optimizer's output, before re-ranking.
    pub objective: f64,
    pub de_evaluations: usize,
}

const BOUNDS: [(f64, f64); 4] = [
    (0.0, std::f64::consts::PI),
    (-std::f64::consts::PI, std::f64::consts::PI),
    (0.0, std::f64::consts::PI),
    (-std::f64::consts::PI, std::f64::consts::PI),
];

fn axis_obs(x: &[f64]) -> Observable<f64> {
    general_axis_observable(x[0], x[1], x[2], x[3])
}

/// Differential evolution over `(beta1, alpha1, beta2, alpha2)` on the
/// penalized objective, a Nelder-Mead polish, then a re-rank of the sampled
/// neighbourhood that keeps the largest slope among near-minimal variances.
pub fn general_axis_search(
    phi12: f64,
    cfg: &SensingConfig<f64>,
    sc: &SearchConfig,
    seed: u64,
) -> Result<AxisSearchOutcome> {
    cfg.validate()?;
    sc.validate()?;
    let rho = weighted_graph_state(phi12).to_density();
    let probe = Probe::new(&rho, cfg.theta_star);
    let floor = cfg.derivative_floor.max(1e-12);
    let stats = |x: &[f64]| {
        let (e, d) = probe.eval(&axis_obs(x));
        ((1.0 - e * e).max(0.0), d.abs())
    };
    let objective = |x: &[f64]| {
        let (v, d) = stats(x);
        if d < floor {
            return 1e12;
        }
        v / (d * d) + sc.penalty_weight / d
    };

    let de = differential_evolution(
        objective,
        &BOUNDS,
        DeOptions {
            population: sc.de_population,
            generations: sc.de_generations,
            parallel: sc.parallel,
            ..DeOptions::default()
        },
        seed,
    );
    let mut best = de.x.clone();
    let mut best_f = de.fx;
    if sc.refine {
        let nm = nelder_mead(
            objective,
            &best,
            &[0.05; 4],
            NelderMeadOptions {
                max_iter: 20_000,
                f_tol: 1e-15,
                x_tol: 1e-11,
            },
        );
        if nm.fx <= best_f {
            best = nm.x;
            best_f = nm.fx;
        }
    }
    if !best_f.is_finite() || best_f >= 1e12 {
        return Err(Error::NoConvergence {
            what: "general-axis search",
            best: best_f,
            grad_norm: f64::NAN,
        });
    }

    // Re-rank inside the neighbourhood on the unpenalized variance.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let estimator = |x: &[f64]| {
        let (v, d) = stats(x);
        if d < floor {
            (f64::INFINITY, d)
        } else {
            (v / (d * d), d)
        }
    };
    let mut samples = vec![(best.clone(), estimator(&best))];
    if sc.neighborhood_radius > 0.0 {
        let r = sc.neighborhood_radius;
        for _ in 0..sc.neighborhood_samples {
            let x: Vec<f64> = best
                .iter()
                .zip(BOUNDS)
                .map(|(c, (lo, hi))| (c + rng.random_range(-r..=r)).clamp(lo, hi))
                .collect();
            let s = estimator(&x);
            samples.push((x, s));
        }
    }
    let v_min = samples.iter().map(|s| s.1 .0).fold(f64::INFINITY, f64::min);
    let (angles, _) = samples
        .iter()
        .filter(|s| s.1 .0 <= v_min + sc.variance_tolerance)
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("the refined point is always a candidate when v_min is finite");
    let observable = axis_obs(angles);
    let result = sense(&rho, &observable, cfg, DerivativeMode::Analytic)?;
    Ok(AxisSearchOutcome {
        observable,
        result,
        angles: [angles[0], angles[1], angles[2], angles[3]],
        objective: best_f,
        de_evaluations: sc.de_population * (sc.de_generations + 1),
    })
}
