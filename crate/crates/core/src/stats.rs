//! Bin bootstrap for expectation values, slopes and estimator variances,
//! fringe visibility and the cosine fit `f(x) = a cos(b x + c) + d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex as FftComplex, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{invalid, Error, Result};
use crate::measurement::{simulate_counts, CountRecord};
use crate::optimize::{bfgs, BfgsOptions};
use crate::qmath::decomp::solve_real;
use crate::scalar::wrap_angle;

pub const DEFAULT_BINS: usize = 6;
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const MAX_REDRAWS: usize = 100;

/// `L` acquisition bins of one measurement setting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinnedCounts {
    bins: Vec<CountRecord>,
}

impl BinnedCounts {
    pub fn new(bins: Vec<CountRecord>) -> Result<Self> {
        if bins.len() < 2 {
            return Err(invalid("bins", "need at least 2 bins"));
        }
        Ok(Self { bins })
    }

    /// `l` Poisson bins of `rate * duration` expected coincidences; bin `k`
    /// uses seed `seed + k`.
    pub fn simulate(
        probs: &[f64; 4],
        rate: f64,
        duration: f64,
        l: usize,
        seed: u64,
    ) -> Result<Self> {
        let bins = (0..l as u64)
            .map(|k| simulate_counts(probs, rate, duration, seed.wrapping_add(k)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bins)
    }

    pub fn bins(&self) -> &[CountRecord] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(CountRecord::total).sum()
    }

    /// Pooled counts over all bins.
    pub fn pooled(&self) -> [u64; 4] {
        let mut out = [0; 4];
        for b in &self.bins {
            for (o, c) in out.iter_mut().zip(b.counts) {
                *o += c;
            }
        }
        out
    }

    /// `sum_k w_k N_k / sum_k N_k` over the pooled bins.
    pub fn estimate(&self, weights: &[i8; 4]) -> Option<f64> {
        CountRecord::new(self.pooled(), 0.0).estimate(weights)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    /// Floor on the squared slope in the ratio.
    pub epsilon: f64,
    pub seed: u64,
    pub ci_level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            ci_level: 0.95,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(invalid("replicates", "need at least 100 replicates"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(invalid("ci_level", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Replicates with their mean and percentile interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean resampled total count `nu*` (centre setting for slopes/ratios).
    pub mean_nu: f64,
    /// Replicates whose squared slope was raised to `epsilon`.
    pub clamped: usize,
}

impl BootstrapSummary {
    fn from_samples(samples: Vec<f64>, mean_nu: f64, clamped: usize, level: f64) -> Self {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let tail = (1.0 - level) / 2.0;
        let mut data = Data::new(samples.clone());
        let ci_low = data.quantile(tail);
        let ci_high = data.quantile(1.0 - tail);
        Self {
            samples,
            mean,
            ci_low,
            ci_high,
            mean_nu,
            clamped,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    /// Sample variance of the replicates.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        self.samples
            .iter()
            .map(|s| (s - self.mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    }
}

/// `mu` replicates `(E*, nu*)` from ChaCha8 stream `stream` of `cfg.seed`.
fn resample(
    bins: &BinnedCounts,
    weights: &[i8; 4],
    cfg: &BootstrapConfig,
    stream: u64,
) -> Result<Vec<(f64, f64)>> {
    if bins.total() == 0 {
        return Err(Error::DegenerateData("all bins are empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let l = bins.len();
    let mut out = Vec::with_capacity(cfg.replicates);
    for _ in 0..cfg.replicates {
        let mut redraws = 0;
        loop {
            let mut n = [0u64; 4];
            for _ in 0..l {
                let b = &bins.bins[rng.random_range(0..l)];
                for (acc, c) in n.iter_mut().zip(b.counts) {
                    *acc += c;
                }
            }
            let nu: u64 = n.iter().sum();
            if nu > 0 {
                let num: f64 = n
                    .iter()
                    .zip(weights)
                    .map(|(&c, &w)| c as f64 * w as f64)
                    .sum();
                out.push((num / nu as f64, nu as f64));
                break;
            }
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::DegenerateData(format!(
                    "{MAX_REDRAWS} consecutive resamples had zero counts"
                )));
            }
        }
    }
    Ok(out)
}

fn mean_nu(r: &[(f64, f64)]) -> f64 {
    r.iter().map(|x| x.1).sum::<f64>() / r.len() as f64
}

/// Replicates of `E* = sum_k w_k N*_k / nu*`.
pub fn bootstrap_expectation(
    bins: &BinnedCounts,
    weights: &[i8; 4],
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    cfg.validate()?;
    let r = resample(bins, weights, cfg, 0)?;
    let nu = mean_nu(&r);
    Ok(BootstrapSummary::from_samples(
        r.into_iter().map(|x| x.0).collect(),
        nu,
        0,
        cfg.ci_level,
    ))
}

/// Replicates of the single-shot variance `1 - (E*)^2`.
pub fn bootstrap_variance(
    bins: &BinnedCounts,
    weights: &[i8; 4],
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    cfg.validate()?;
    let r = resample(bins, weights, cfg, 0)?;
    let nu = mean_nu(&r);
    let s = r.into_iter().map(|x| 1.0 - x.0 * x.0).collect();
    Ok(BootstrapSummary::from_samples(s, nu, 0, cfg.ci_level))
}

fn check_shift(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", "must be positive"));
    }
    Ok(())
}

/// Replicates of `(E*(theta*+h) - E*(theta*-h)) / 2h`, resampling the two
/// settings independently.
pub fn bootstrap_derivative(
    bins_plus: &BinnedCounts,
    bins_minus: &BinnedCounts,
    h: f64,
    weights: &[i8; 4],
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    cfg.validate()?;
    check_shift(h)?;
    let p = resample(bins_plus, weights, cfg, 1)?;
    let m = resample(bins_minus, weights, cfg, 2)?;
    let nu = (mean_nu(&p) + mean_nu(&m)) / 2.0;
    let s = p
        .iter()
        .zip(&m)
        .map(|(a, b)| (a.0 - b.0) / (2.0 * h))
        .collect();
    Ok(BootstrapSummary::from_samples(s, nu, 0, cfg.ci_level))
}

/// Replicates of `(1 - E*(theta*)^2) / max(slope*^2, epsilon)`; `clamped`
/// counts the replicates where the floor was active.
pub fn bootstrap_ratio(
    bins_center: &BinnedCounts,
    bins_plus: &BinnedCounts,
    bins_minus: &BinnedCounts,
    h: f64,
    weights: &[i8; 4],
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    cfg.validate()?;
    check_shift(h)?;
    let c = resample(bins_center, weights, cfg, 0)?;
    let p = resample(bins_plus, weights, cfg, 1)?;
    let m = resample(bins_minus, weights, cfg, 2)?;
    let mut clamped = 0;
    let s = c
        .iter()
        .zip(p.iter().zip(&m))
        .map(|(c, (p, m))| {
            let d = (p.0 - m.0) / (2.0 * h);
            let d2 = d * d;
            if d2 < cfg.epsilon {
                clamped += 1;
            }
            (1.0 - c.0 * c.0) / d2.max(cfg.epsilon)
        })
        .collect();
    Ok(BootstrapSummary::from_samples(
        s,
        mean_nu(&c),
        clamped,
        cfg.ci_level,
    ))
}

/// `(N_max - N_min) / (N_max + N_min)`.
pub fn visibility(n_max: f64, n_min: f64) -> Result<f64> {
    if !(n_min >= 0.0 && n_max >= n_min && n_max.is_finite()) {
        return Err(invalid("counts", "need n_max >= n_min >= 0"));
    }
    if n_max <= 0.0 {
        return Err(Error::DegenerateData("both counts are zero".into()));
    }
    Ok((n_max - n_min) / (n_max + n_min))
}

/// `a cos(b x + c) + d`, canonicalized to `a <= 0`, `b >= 0`, `c` in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// RMS of the fit errors.
    pub residual: f64,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * (self.b * x + self.c).cos() + self.d
    }

    fn canonical(a: f64, b: f64, c: f64, d: f64, residual: f64) -> Self {
        let (mut a, mut b, mut c) = (a, b, c);
        if b < 0.0 {
            b = -b;
            c = -c;
        }
        if a > 0.0 {
            a = -a;
            c += std::f64::consts::PI;
        }
        Self {
            a,
            b,
            c: wrap_angle(c),
            d,
            residual,
        }
    }
}

/// For fixed `b` the model is linear in `(p, q, d)` with
/// `f = p cos(bx) + q sin(bx) + d`; returns those and the sum of squares.
fn linear_given_b(xs: &[f64], ys: &[f64], b: f64) -> Option<([f64; 3], f64)> {
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let row = [(b * x).cos(), (b * x).sin(), 1.0];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let sol = solve_real(&ata, &aty)?;
    let p = [sol[0], sol[1], sol[2]];
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (p[0] * (b * x).cos() + p[1] * (b * x).sin() + p[2] - y).powi(2))
        .sum();
    Some((p, sse))
}

fn uniform_step(xs: &[f64]) -> Option<f64> {
    let dx = xs[1] - xs[0];
    let ok = dx > 0.0
        && xs
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-9 * dx.abs().max(1.0));
    ok.then_some(dx)
}

/// Angular frequency of the largest non-DC peak of the zero-padded spectrum.
fn fft_frequency(ys: &[f64], dx: f64) -> f64 {
    let n = ys.len();
    let m = (16 * n).next_power_of_two();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<FftComplex<f64>> = ys.iter().map(|y| FftComplex::new(y - mean, 0.0)).collect();
    buf.resize(m, FftComplex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let k = (1..m / 2)
        .max_by(|&i, &j| buf[i].norm_sqr().total_cmp(&buf[j].norm_sqr()))
        .unwrap_or(1);
    2.0 * std::f64::consts::PI * k as f64 / (m as f64 * dx)
}

/// Golden-section minimum of `f` on `[lo, hi]`.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    (lo + hi) / 2.0
}

/// Least-squares fit of `a cos(b x + c) + d`.
///
/// The frequency is seeded from the FFT peak (uniform grids) or a coarse scan,
/// refined by golden section on the variable-projection residual, and the four
/// parameters are then polished jointly with BFGS.
pub fn cosine_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(invalid("ys", "length must match xs"));
    }
    if xs.len() < 4 {
        return Err(invalid("xs", "need at least 4 points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("data", "must be finite"));
    }
    let n = xs.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let spread = ys.iter().map(|y| (y - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-14 * mean.abs().max(1.0) {
        return Ok(FitResult::canonical(0.0, 0.0, 0.0, mean, 0.0));
    }

    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let vp = |b: f64| linear_given_b(xs, ys, b).map_or(f64::INFINITY, |r| r.1);
    let b0 = match uniform_step(xs) {
        Some(dx) => fft_frequency(ys, dx),
        None => {
            let mut sorted: Vec<f64> = xs
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .filter(|d| *d > 0.0)
                .collect();
            sorted.sort_by(f64::total_cmp);
            let dx = sorted.get(sorted.len() / 2).copied().unwrap_or(1.0);
            let bmax = std::f64::consts::PI / dx;
            (1..=2000)
                .map(|k| bmax * k as f64 / 2000.0)
                .min_by(|a, b| vp(*a).total_cmp(&vp(*b)))
                .unwrap_or(bmax)
        }
    };
    // One FFT bin of the unpadded record either side.
    let bin = 2.0 * std::f64::consts::PI / span.max(f64::MIN_POSITIVE);
    let b1 = golden(vp, (b0 - bin).max(0.0), b0 + bin);
    let ([p, q, d], _) = linear_given_b(xs, ys, b1)
        .ok_or(Error::DegenerateData("design matrix is singular".into()))?;
    // p cos + q sin = a cos(bx + c) with a = hypot, c = atan2(-q, p).
    let x0 = [p.hypot(q), b1, (-q).atan2(p), d];

    let fg = |v: &[f64]| {
        let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
        let mut f = 0.0;
        let mut g = vec![0.0; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let (s, co) = (b * x + c).sin_cos();
            let r = a * co + d - y;
            f += r * r;
            g[0] += 2.0 * r * co;
            g[1] += -2.0 * r * a * s * x;
            g[2] += -2.0 * r * a * s;
            g[3] += 2.0 * r;
        }
        (f, g)
    };
    let m = bfgs(
        fg,
        &x0,
        BfgsOptions {
            max_iter: 2000,
            grad_tol: 1e-13,
            f_tol: 1e-16,
        },
    );
    let (x, sse) = if m.fx <= fg(&x0).0 {
        (m.x, m.fx)
    } else {
        (x0.to_vec(), fg(&x0).0)
    };
    let scale = ys.iter().map(|y| y * y).sum::<f64>().max(1e-300);
    if !m.converged && m.grad_norm > 1e-6 * scale.sqrt() {
        return Err(Error::NoConvergence {
            what: "cosine fit",
            best: (sse / n).sqrt(),
            grad_norm: m.grad_norm,
        });
    }
    Ok(FitResult::canonical(
        x[0],
        x[1],
        x[2],
        x[3],
        (sse / n).sqrt(),
    ))
}

/// Divides every value by the largest one.
pub fn max_normalize(ys: &[f64]) -> Result<Vec<f64>> {
    let max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::DegenerateData("sweep has no positive counts".into()));
    }
    Ok(ys.iter().map(|y| y / max).collect())
}
