//! Acceptance checks, one line per criterion. Exits non-zero if any fail.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wgsense_core::measurement::{
    outcome_probabilities, pauli_observable, simulate_counts, Observable as Obs,
};
use wgsense_core::metrology::{
    encoded_expectation, encoding_unitary, general_axis_search, pauli_search, qfi_closed_form,
    qfi_numeric, sense, DerivativeMode, SearchConfig, PAULI_SEARCH_ORDER,
};
use wgsense_core::optics::{
    euler_to_waveplates, pauli_for, rotation, rotation_waveplates, Axis, EulerAngles,
};
use wgsense_core::qmath::{concurrence, fidelity, Operator2};
use wgsense_core::stategen::{
    fringe_state, simulate_generation, weighted_graph_state, GenerationConfig,
};
use wgsense_core::stats::{
    bootstrap_expectation, cosine_fit, visibility, BinnedCounts, BootstrapConfig,
};
use wgsense_core::tomography::{mle_reconstruct, monte_carlo_report, simulate_tomography};
use wgsense_core::SensingConfig;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            detail: String::new(),
        }
    }

    fn require(&mut self, cond: bool, what: impl Into<String>) {
        if !cond {
            self.ok = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&what.into());
    }

    fn budget(&mut self, t: Instant, limit: Duration) {
        let e = t.elapsed();
        self.require(e < limit, format!("runtime {:.2?} over {:?}", e, limit));
        self.note(format!("{:.2?}", e));
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect()
}

/// Pauli benchmark: weight (units of pi/8), operator, <A>, |slope|, variance.
const PAULI_BENCH: [(u32, &str, f64, f64, f64); 9] = [
    (8, "ZY", 0.00, 2.00, 0.25),
    (7, "ZY", -0.19, 1.92, 0.26),
    (6, "ZY", -0.35, 1.71, 0.30),
    (5, "ZY", -0.46, 1.38, 0.41),
    (4, "ZY", -0.50, 1.00, 0.75),
    (3, "YY", 0.31, 0.92, 1.06),
    (2, "IY", 0.35, 0.85, 1.20),
    (1, "IY", 0.19, 0.96, 1.04),
    (0, "IY", 0.00, 1.00, 1.00),
];

/// General-axis benchmark: weight (units of pi/8), |slope|, variance.
const GENERAL_BENCH: [(u32, f64, f64); 9] = [
    (8, 2.00, 0.25),
    (7, 1.92, 0.26),
    (6, 1.69, 0.28),
    (5, 1.50, 0.32),
    (4, 1.34, 0.39),
    (3, 1.17, 0.51),
    (2, 1.05, 0.69),
    (1, 1.05, 0.90),
    (0, 1.00, 1.00),
];

const SEED: u64 = 1;

fn criterion_1() -> Check {
    let mut c = Check::new();
    let t = Instant::now();
    let mut worst = 0.0f64;
    for phi in grid(33) {
        let d = (qfi_closed_form(phi) - qfi_numeric(&weighted_graph_state(phi))).abs();
        worst = worst.max(d);
    }
    c.require(worst < 1e-9, format!("max |closed - numeric| = {worst:e}"));
    c.require(
        qfi_closed_form(PI) == 4.0,
        format!("F_Q(pi) = {}", qfi_closed_form(PI)),
    );
    c.require(
        qfi_closed_form(0.0) == 1.0,
        format!("F_Q(0) = {}", qfi_closed_form(0.0)),
    );
    c.note(format!("max deviation {worst:.1e}"));
    c.budget(t, Duration::from_secs(1));
    c
}

fn criterion_2() -> Check {
    let mut c = Check::new();
    let t = Instant::now();
    let cfg = SensingConfig::default();
    for (k, op, e, d, v) in PAULI_BENCH {
        let phi = PI * k as f64 / 8.0;
        let (obs, r) = pauli_search(phi, &cfg).unwrap();
        let row = format!("{k}pi/8");
        c.require(
            (r.expectation - e).abs() <= 0.01,
            format!("{row}: <A> {:.4} vs {e}", r.expectation),
        );
        c.require(
            (r.derivative_magnitude - d).abs() <= 0.01,
            format!("{row}: slope {:.4} vs {d}", r.derivative_magnitude),
        );
        c.require(
            (r.estimator_variance - v).abs() <= 0.01,
            format!("{row}: var {:.4} vs {v}", r.estimator_variance),
        );
        let rho = weighted_graph_state(phi).to_density();
        let mut vars: Vec<f64> = PAULI_SEARCH_ORDER
            .iter()
            .filter_map(|&(a, b)| {
                sense(
                    &rho,
                    &pauli_observable(a, b),
                    &cfg,
                    DerivativeMode::Analytic,
                )
                .ok()
            })
            .map(|s| s.estimator_variance)
            .collect();
        vars.sort_by(f64::total_cmp);
        let unique = vars.len() < 2 || vars[1] - vars[0] > 1e-6;
        if unique {
            c.require(
                obs.label() == op,
                format!("{row}: operator {} vs {op}", obs.label()),
            );
        }
    }
    c.note("9 rows");
    c.budget(t, Duration::from_secs(5));
    c
}

fn criterion_3() -> Check {
    let mut c = Check::new();
    let t = Instant::now();
    for (k, d, v) in GENERAL_BENCH {
        let phi = PI * k as f64 / 8.0;
        let out = general_axis_search(
            phi,
            &SensingConfig::default(),
            &SearchConfig::default(),
            SEED,
        )
        .unwrap();
        let r = out.result;
        let row = format!("{k}pi/8");
        c.require(
            (r.estimator_variance - v).abs() <= 0.01,
            format!("{row}: var {:.4} vs {v}", r.estimator_variance),
        );
        c.require(
            (r.derivative_magnitude - d).abs() <= 0.02,
            format!("{row}: slope {:.4} vs {d}", r.derivative_magnitude),
        );
    }
    c.note(format!("9 rows, seed {SEED}"));
    c.budget(t, Duration::from_secs(120));
    c
}

fn criterion_4() -> Check {
    let mut c = Check::new();
    let t = Instant::now();
    let cfg = SensingConfig::default();
    let mut at_pi = None;
    for phi in grid(33) {
        let qcrb = 1.0 / qfi_closed_form(phi);
        let g = general_axis_search(phi, &cfg, &SearchConfig::default(), SEED)
            .unwrap()
            .result
            .estimator_variance;
        let p = pauli_search(phi, &cfg).unwrap().1.estimator_variance;
        let row = format!("phi12 = {:.4}", phi);
        c.require(
            g >= qcrb - 1e-9,
            format!("{row}: general {g:.6} below QCRB {qcrb:.6}"),
        );
        c.require(
            p >= g - 1e-6,
            format!("{row}: pauli {p:.8} below general {g:.8}"),
        );
        if phi >= PI / 2.0 - 1e-12 {
            c.require(g < 0.5, format!("{row}: general {g:.4} not below SQL"));
        }
        if phi == PI {
            at_pi = Some((qcrb, g, p));
        }
    }
    let (q, g, p) = at_pi.unwrap();
    let eq = (q - 0.25).abs() < 1e-6 && (g - 0.25).abs() < 1e-6 && (p - 0.25).abs() < 1e-6;
    c.require(eq, format!("at pi: qcrb {q}, general {g}, pauli {p}"));
    c.note("33 grid points");
    c.note(format!("{:.2?}", t.elapsed()));
    c
}

fn criterion_5() -> Check {
    let mut c = Check::new();
    let mut worst_f = 1.0f64;
    let mut worst_p = 0.0f64;
    for k in 0..9 {
        let phi = PI * k as f64 / 8.0;
        let g = simulate_generation(&GenerationConfig::canonical(phi)).unwrap();
        worst_f = worst_f.min(g.state.overlap(&weighted_graph_state(phi)));
        worst_p = worst_p.max((g.postselect_probability - 0.5).abs());
    }
    c.require(worst_f >= 1.0 - 1e-10, format!("min fidelity {worst_f}"));
    c.require(
        worst_p <= 1e-12,
        format!("post-selection deviation {worst_p:e}"),
    );
    c.note(format!("min fidelity 1-{:.1e}", 1.0 - worst_f));
    c
}

fn criterion_6() -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let th: f64 = rng.random_range(-2.0 * PI..2.0 * PI);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            worst = worst.max(
                rotation_waveplates(axis, th)
                    .compose()
                    .phase_aligned_distance(&rotation(axis, th)),
            );
        }
        let id = rotation_waveplates(Axis::Identity, th).compose();
        worst = worst.max(id.phase_aligned_distance(&pauli_for::<f64>(Axis::Identity)));
    }
    c.require(
        worst < 1e-10,
        format!("rotation triples: max distance {worst:e}"),
    );
    let mut worst_e = 0.0f64;
    for _ in 0..100 {
        let e = EulerAngles::new(
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
        );
        worst_e = worst_e.max(
            euler_to_waveplates(&e)
                .compose()
                .phase_aligned_distance(&e.unitary()),
        );
    }
    c.require(
        worst_e < 1e-10,
        format!("Euler round trip: max distance {worst_e:e}"),
    );
    c.require(
        rotation_waveplates(Axis::Z, 0.0)
            .compose()
            .phase_aligned_distance(&Operator2::identity())
            < 1e-10,
        "identity triple",
    );
    c.note(format!("max distances {worst:.1e} / {worst_e:.1e}"));
    c
}

fn criterion_7() -> Check {
    let mut c = Check::new();
    let t = Instant::now();
    let weights = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
    let mut min_exact = 1.0f64;
    let mut min_mc = 1.0f64;
    for (i, &phi) in weights.iter().enumerate() {
        let psi = weighted_graph_state(phi);
        let rho = psi.to_density();
        // Rectilinear settings (p = 1/4 each) then average ~1500 counts.
        let exact = simulate_tomography(&rho, 600.0, 10.0, 0, false).unwrap();
        let f = fidelity(&mle_reconstruct(&exact).unwrap(), &psi);
        c.require(
            f >= 0.999,
            format!("exact phi12 = {phi:.3}: fidelity {f:.6}"),
        );
        min_exact = min_exact.min(f);
        // Poisson resamples of the expected counts are independent Poisson-mode runs.
        let rep = monte_carlo_report(&exact, &psi, 100, SEED + i as u64).unwrap();
        c.require(
            rep.fidelity.mc_mean >= 0.99,
            format!(
                "Poisson phi12 = {phi:.3}: mean fidelity {:.4}",
                rep.fidelity.mc_mean
            ),
        );
        min_mc = min_mc.min(rep.fidelity.mc_mean);
    }
    c.note(format!(
        "min exact fidelity {min_exact:.6}, min Poisson mean {min_mc:.4}"
    ));
    c.note(format!("{:.2?}", t.elapsed()));
    c
}

fn counts_at(
    rho: &wgsense_core::Density,
    obs: &Obs<f64>,
    theta: f64,
    rate: f64,
    duration: f64,
    l: usize,
    seed: u64,
) -> BinnedCounts {
    let probs = outcome_probabilities(&rho.evolve(&encoding_unitary(theta)), obs);
    BinnedCounts::simulate(&probs, rate, duration, l, seed).unwrap()
}

fn criterion_8() -> Check {
    let mut c = Check::new();
    let t = Instant::now();
    let phi = PI;
    let theta = 0.3;
    let rho = weighted_graph_state(phi).to_density();
    let obs = pauli_observable(
        wgsense_core::measurement::PauliLabel::Z,
        wgsense_core::measurement::PauliLabel::Y,
    );
    let truth = encoded_expectation(&rho, &obs, theta);

    // 1500 expected coincidences per bin, six bins, 200 independent runs.
    let runs = 200;
    let mut covered = 0;
    for r in 0..runs {
        let seed = 10_000 + 1000 * r as u64;
        let bins = counts_at(&rho, &obs, theta, 150.0, 10.0, 6, seed);
        let cfg = BootstrapConfig {
            seed,
            ..Default::default()
        };
        if bootstrap_expectation(&bins, &obs.weights, &cfg)
            .unwrap()
            .contains(truth)
        {
            covered += 1;
        }
    }
    let coverage = covered as f64 / runs as f64;
    c.require(
        coverage >= 0.90,
        format!("95% CI coverage {covered}/{runs} = {coverage:.3} < 0.90"),
    );
    if coverage >= 0.90 {
        c.note(format!("coverage {covered}/{runs}"));
    }

    // Shot-noise relation on the spread of independent estimates at nu = 1500.
    let probs = outcome_probabilities(&rho.evolve(&encoding_unitary(theta)), &obs);
    let mut est = Vec::new();
    let mut nus = Vec::new();
    for r in 0..4000u64 {
        let rec = simulate_counts(&probs, 150.0, 10.0, 900_000 + r).unwrap();
        est.push(rec.estimate(&obs.weights).unwrap());
        nus.push(rec.total() as f64);
    }
    let n = est.len() as f64;
    let mean = est.iter().sum::<f64>() / n;
    let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let nu = nus.iter().sum::<f64>() / n;
    let lhs = nu * var;
    let rhs = 1.0 - truth * truth;
    c.require(nu >= 1500.0 - 5.0, format!("mean nu {nu:.0}"));
    c.require(
        ((lhs - rhs) / rhs).abs() <= 0.10,
        format!("nu Var(E) = {lhs:.4} vs (dA)^2 = {rhs:.4}"),
    );
    c.note(format!("nu Var(E) / (dA)^2 = {:.3}", lhs / rhs));

    // End-to-end through the binary.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sense.json");
    let status = Command::new(env!("CARGO_BIN_EXE_wgsense"))
        .args([
            "sense",
            "--phi12",
            "180",
            "--observable",
            "ZY",
            "--rate",
            "150",
            "--duration",
            "10",
            "--bins",
            "6",
        ])
        .args(["--seed", &SEED.to_string(), "--no-timestamp", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    c.require(status.success(), format!("sense exited with {status}"));
    if status.success() {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
        let lo = v["estimator_variance"]["ci_low"].as_f64().unwrap();
        let hi = v["estimator_variance"]["ci_high"].as_f64().unwrap();
        c.require(
            lo <= 0.25 && 0.25 <= hi,
            format!("sense CI [{lo:.4}, {hi:.4}] misses 0.25"),
        );
        c.note(format!("sense CI [{lo:.3}, {hi:.3}]"));
    }
    c.budget(t, Duration::from_secs(300));
    c
}

fn criterion_9() -> Check {
    let mut c = Check::new();
    let n = 37;
    let xs: Vec<f64> = (0..n)
        .map(|k| 2.0 * PI * k as f64 / (n - 1) as f64)
        .collect();
    // A (x) H projector on the fringe state.
    let analyzer = pauli_observable(
        wgsense_core::measurement::PauliLabel::X,
        wgsense_core::measurement::PauliLabel::Z,
    );
    let ys: Vec<f64> = xs
        .iter()
        .map(|&p| outcome_probabilities(&fringe_state(p).to_density(), &analyzer)[2])
        .collect();
    let max = ys.iter().cloned().fold(f64::MIN, f64::max);
    let min = ys.iter().cloned().fold(f64::MAX, f64::min);
    let v = visibility(max, min).unwrap();
    c.require((v - 1.0).abs() < 1e-9, format!("noiseless visibility {v}"));

    let (a, b, cc, d) = (-0.445, 0.235, 0.0662, 0.531);
    let ks: Vec<f64> = (0..30).map(f64::from).collect();
    let data: Vec<f64> = ks.iter().map(|&k| a * (b * k + cc).cos() + d).collect();
    let fit = cosine_fit(&ks, &data).unwrap();
    let err = [(fit.a - a), (fit.b - b), (fit.c - cc), (fit.d - d)]
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()));
    c.require(err < 1e-6, format!("cosine fit max error {err:e}"));

    let mut worst = 0.0f64;
    for phi in grid(65) {
        let cn = concurrence(&weighted_graph_state(phi).to_density());
        worst = worst.max((cn - (phi / 2.0).sin().abs()).abs());
    }
    c.require(worst < 1e-9, format!("concurrence law max error {worst:e}"));
    c.note(format!(
        "V = {v:.12}, fit error {err:.1e}, concurrence error {worst:.1e}"
    ));
    c
}

fn main() {
    let checks: [(u32, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = Vec::new();
    for (n, f) in checks {
        let r = f();
        println!(
            "criterion {n}: {} ({})",
            if r.ok { "PASS" } else { "FAIL" },
            r.detail
        );
        if !r.ok {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
