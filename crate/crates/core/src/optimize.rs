//! Small-dimensional optimizers working on `f64` parameter vectors:
//! Nelder-Mead, differential evolution (rand/1/bin) and BFGS with Armijo
//! backtracking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Outcome of a local or global minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            f_tol: 1e-14,
            x_tol: 1e-10,
        }
    }
}

/// Nelder-Mead simplex search from `x0` with initial edge lengths `step`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for i in 1..=n {
            let v: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&v);
            simplex[i] = v;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        converged,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DeOptions {
    pub population: usize,
    pub generations: usize,
    /// Mutation factor is drawn uniformly from this range once per generation.
    pub mutation: (f64, f64),
    pub crossover: f64,
    /// Evaluate the population with rayon. Results do not depend on this flag.
    pub parallel: bool,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            population: 40,
            generations: 300,
            mutation: (0.5, 1.0),
            crossover: 0.7,
            parallel: false,
        }
    }
}

/// Differential evolution, strategy rand/1/bin, inside the box `bounds`.
///
/// All random draws come from one ChaCha8 stream consumed sequentially, so the
/// result is identical for a given seed whether or not evaluation runs in
/// parallel. Out-of-box trial coordinates are redrawn uniformly.
pub fn differential_evolution<F>(f: F, bounds: &[(f64, f64)], opts: DeOptions, seed: u64) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    let np = opts.population.max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eval = |x: &Vec<f64>| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let eval_all = |xs: &Vec<Vec<f64>>| -> Vec<f64> {
        if opts.parallel {
            xs.par_iter().map(eval).collect()
        } else {
            xs.iter().map(eval).collect()
        }
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi))
                .collect()
        })
        .collect();
    let mut fit = eval_all(&pop);

    for _ in 0..opts.generations {
        let scale = rng.random_range(opts.mutation.0..opts.mutation.1);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let a = pick_distinct(&mut rng, np, &[i]);
                let b = pick_distinct(&mut rng, np, &[i, a]);
                let c = pick_distinct(&mut rng, np, &[i, a, b]);
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == forced || rng.random::<f64>() < opts.crossover {
                            let v = pop[a][j] + scale * (pop[b][j] - pop[c][j]);
                            let (lo, hi) = bounds[j];
                            if v < lo || v > hi {
                                rng.random_range(lo..hi)
                            } else {
                                v
                            }
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fit = eval_all(&trials);
        for (i, (t, ft)) in trials.into_iter().zip(trial_fit).enumerate() {
            if ft <= fit[i] {
                pop[i] = t;
                fit[i] = ft;
            }
        }
    }
    let best = (0..np)
        .min_by(|&a, &b| fit[a].total_cmp(&fit[b]))
        .unwrap_or(0);
    Minimum {
        x: pop[best].clone(),
        fx: fit[best],
        iterations: opts.generations,
        converged: fit[best].is_finite(),
    }
}

fn pick_distinct(rng: &mut ChaCha8Rng, n: usize, exclude: &[usize]) -> usize {
    loop {
        let k = rng.random_range(0..n);
        if !exclude.contains(&k) {
            return k;
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Relative decrease below which successive iterations count as stalled.
    pub f_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            grad_tol: 1e-9,
            f_tol: 1e-15,
        }
    }
}

/// BFGS result with the final gradient norm.
#[derive(Clone, Debug, PartialEq)]
pub struct GradMinimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton minimization; `fg` returns the value and gradient.
pub fn bfgs<F>(fg: F, x0: &[f64], opts: BfgsOptions) -> GradMinimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = fg(&x);
    let mut hinv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut stalled = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let gn = dot(&g, &g).sqrt();
        if gn <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = hinv.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            // Lost descent: restart from steepest descent.
            for (i, row) in hinv.iter_mut().enumerate() {
                row.iter_mut()
                    .enumerate()
                    .for_each(|(j, v)| *v = if i == j { 1.0 } else { 0.0 });
            }
            d = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (fn_, gn_) = fg(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn_)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn_.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let hy: Vec<f64> = hinv.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let decrease = fx - fn_;
        x = xn;
        g = gn_;
        if decrease <= opts.f_tol * fx.abs().max(1.0) {
            stalled += 1;
            if stalled >= 5 {
                converged = true;
                fx = fn_;
                break;
            }
        } else {
            stalled = 0;
        }
        fx = fn_;
    }
    GradMinimum {
        grad_norm: dot(&g, &g).sqrt(),
        x,
        fx,
        iterations,
        converged,
    }
}
