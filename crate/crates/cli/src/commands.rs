use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use wgsense_core::measurement::Pol;
use wgsense_core::measurement::{
    observable_settings, outcome_probabilities, tomography_settings, ProjectorSetting,
};
use wgsense_core::metrology::{
    encoding_unitary, general_axis_search, pauli_search, qfi_closed_form, sense, DerivativeMode,
    SearchConfig, HL, SQL,
};
use wgsense_core::qmath::{concurrence, fidelity, kron_vec, pure_concurrence};
use wgsense_core::stategen::{
    apply_noise, fringe_state, simulate_generation, weighted_graph_state, GenerationConfig,
    NoiseModel,
};
use wgsense_core::stats::{
    bootstrap_derivative, bootstrap_expectation, bootstrap_ratio, bootstrap_variance, cosine_fit,
    max_normalize, visibility, BinnedCounts, BootstrapConfig, BootstrapSummary,
};
use wgsense_core::tomography::{
    monte_carlo_report_with, simulate_tomography, Likelihood, MleOptions, TomographyDataset,
    TomographyRecord, N_SETTINGS,
};
use wgsense_core::{Density, SensingConfig};

use crate::cli::*;
use crate::output::{complex_pair, Artifact, CliError, CliResult, Outcome, SCHEMA_VERSION};
use crate::parse;

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn density_json(rho: &Density) -> Vec<Vec<[f64; 2]>> {
    rho.matrix()
        .rows()
        .iter()
        .map(|r| r.iter().map(|&z| complex_pair(z)).collect())
        .collect()
}

fn noise_model(noise: &Option<Vec<String>>) -> CliResult<Option<(f64, f64)>> {
    let Some(v) = noise else { return Ok(None) };
    let p: f64 = v[0]
        .parse()
        .map_err(|_| usage(format!("invalid depolarizing probability `{}`", v[0])))?;
    let sigma = parse::angle(&v[1]).map_err(usage)?;
    Ok(Some((p, sigma)))
}

fn prepare_state(phi12: f64, noise: Option<(f64, f64)>, seed: u64) -> CliResult<Density> {
    let psi = weighted_graph_state(phi12);
    match noise {
        None => Ok(psi.to_density()),
        Some((p, sigma)) => Ok(apply_noise(&psi, &NoiseModel::new(p, sigma)?, seed)?),
    }
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn state(a: &StateArgs) -> CliResult<Outcome> {
    let noise = noise_model(&a.noise)?;
    let ideal = weighted_graph_state(a.phi12);
    let (psi, postselect) = if a.pipeline {
        let g = simulate_generation(&GenerationConfig::canonical(a.phi12))?;
        (g.state, Some(g.postselect_probability))
    } else {
        (ideal, None)
    };
    let (rho, amplitudes) = match noise {
        None => (psi.to_density(), Some(psi.amplitudes().map(complex_pair))),
        Some((p, sigma)) => (
            apply_noise(&psi, &NoiseModel::new(p, sigma)?, a.seed.seed)?,
            None,
        ),
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "phi12_rad": a.phi12,
        "phi12_deg": a.phi12.to_degrees(),
        "source": if a.pipeline { "pipeline" } else { "direct" },
        "postselect_probability": postselect,
        "noise": noise.map(|(p, s)| json!({"depolarizing_p": p, "phase_jitter_sigma_rad": s})),
        "amplitudes": amplitudes,
        "density": density_json(&rho),
        "fidelity_to_ideal": fidelity(&rho, &ideal),
        "concurrence": concurrence(&rho),
        "ideal_concurrence": pure_concurrence(&ideal),
        "purity": rho.purity(),
    });
    let params = json!({"phi12_rad": a.phi12, "pipeline": a.pipeline, "noise": noise});
    let seed = noise.map(|_| a.seed.seed);
    Ok(match &a.out {
        Some(p) => Outcome {
            artifacts: vec![Artifact::json(p, &report)?],
            stdout: None,
            parameters: params,
            seed,
        },
        None => {
            let mut b = serde_json::to_vec_pretty(&report)?;
            b.push(b'\n');
            Outcome {
                artifacts: vec![],
                stdout: Some(b),
                parameters: params,
                seed,
            }
        }
    })
}

#[derive(Serialize)]
struct QfiRow {
    schema_version: u32,
    phi12_deg: f64,
    phi12_rad: f64,
    qfi: f64,
    qcrb: f64,
    sql: f64,
    hl: f64,
}

pub fn qfi(a: &QfiArgs) -> CliResult<Outcome> {
    let phis: Vec<f64> = match (a.select.grid, a.select.phi12) {
        (Some(n), _) if n < 2 => return Err(usage("--grid needs at least 2 points")),
        (Some(n), _) => (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect(),
        (None, Some(x)) => vec![x],
        (None, None) => return Err(usage("need --grid or --phi12")),
    };
    let rows: Vec<QfiRow> = phis
        .iter()
        .map(|&p| {
            let f = qfi_closed_form(p);
            QfiRow {
                schema_version: SCHEMA_VERSION,
                phi12_deg: p.to_degrees(),
                phi12_rad: p,
                qfi: f,
                qcrb: 1.0 / f,
                sql: SQL,
                hl: HL,
            }
        })
        .collect();
    let bytes = csv_bytes(&rows)?;
    let params = json!({"grid": a.select.grid, "phi12_rad": a.select.phi12});
    Ok(match &a.out {
        Some(p) => Outcome {
            artifacts: vec![Artifact::csv(p, bytes)],
            stdout: None,
            parameters: params,
            seed: None,
        },
        None => Outcome {
            artifacts: vec![],
            stdout: Some(bytes),
            parameters: params,
            seed: None,
        },
    })
}

fn waveplates_json(s: &[[ProjectorSetting; 2]; 2]) -> Value {
    let one = |p: &ProjectorSetting| json!({"hwp_deg": p.hwp_deg, "qwp_deg": p.qwp_deg, "residual": p.residual});
    json!([
        {"photon": 1, "plus": one(&s[0][0]), "minus": one(&s[0][1])},
        {"photon": 2, "plus": one(&s[1][0]), "minus": one(&s[1][1])},
    ])
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<Outcome> {
    let cfg = SensingConfig {
        theta_star: a.theta_star,
        ..Default::default()
    };
    let (obs, res, angles, seed) = match a.kind {
        SearchKind::Pauli => {
            let (o, r) = pauli_search(a.phi12, &cfg)?;
            (o, r, None, None)
        }
        SearchKind::General => {
            let out = general_axis_search(a.phi12, &cfg, &SearchConfig::default(), a.seed.seed)?;
            (
                out.observable,
                out.result,
                Some(out.angles.map(f64::to_degrees)),
                Some(a.seed.seed),
            )
        }
    };
    let settings = observable_settings(&obs)?;
    let qfi = qfi_closed_form(a.phi12);
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "phi12_rad": a.phi12,
        "phi12_deg": a.phi12.to_degrees(),
        "theta_star_rad": a.theta_star,
        "kind": match a.kind { SearchKind::Pauli => "pauli", SearchKind::General => "general" },
        "observable": obs.label(),
        "weights": obs.weights,
        "axis_angles_deg": angles,
        "result": res,
        "qcrb": 1.0 / qfi,
        "sql": SQL,
        "hl": HL,
        "waveplates": waveplates_json(&settings),
    });
    let params =
        json!({"phi12_rad": a.phi12, "kind": report["kind"], "theta_star_rad": a.theta_star});
    Ok(match &a.out {
        Some(p) => Outcome {
            artifacts: vec![Artifact::json(p, &report)?],
            stdout: None,
            parameters: params,
            seed,
        },
        None => {
            let mut b = serde_json::to_vec_pretty(&report)?;
            b.push(b'\n');
            Outcome {
                artifacts: vec![],
                stdout: Some(b),
                parameters: params,
                seed,
            }
        }
    })
}

#[derive(Serialize)]
struct CountsRow {
    schema_version: u32,
    setting: &'static str,
    theta_rad: f64,
    bin: usize,
    pp: u64,
    pm: u64,
    mp: u64,
    mm: u64,
    duration: f64,
}

fn summary_json(s: &BootstrapSummary) -> Value {
    json!({
        "mean": s.mean,
        "ci_low": s.ci_low,
        "ci_high": s.ci_high,
        "mean_nu": s.mean_nu,
        "clamped": s.clamped,
    })
}

pub fn sense_cmd(a: &SenseArgs) -> CliResult<Outcome> {
    if !(a.rate.is_finite() && a.rate >= 0.0) || !(a.duration.is_finite() && a.duration > 0.0) {
        return Err(usage("rate must be non-negative and duration positive"));
    }
    let obs = parse::observable(&a.observable).map_err(usage)?;
    let rho = weighted_graph_state(a.phi12).to_density();
    let h = a.shift;
    let thetas = [
        ("center", a.theta_star),
        ("plus", a.theta_star + h),
        ("minus", a.theta_star - h),
    ];
    let seed = a.seed.seed;
    let mut bins = Vec::new();
    for (k, &(_, t)) in thetas.iter().enumerate() {
        let probs = outcome_probabilities(&rho.evolve(&encoding_unitary(t)), &obs);
        let s = seed.wrapping_add((k as u64) << 32);
        bins.push(BinnedCounts::simulate(
            &probs, a.rate, a.duration, a.bins, s,
        )?);
    }
    if bins.iter().any(|b| b.total() == 0) {
        return Err(CliError::Degenerate(
            "a measurement setting recorded no coincidences".into(),
        ));
    }
    let cfg = BootstrapConfig {
        replicates: a.replicates,
        seed,
        ..Default::default()
    };
    let w = &obs.weights;
    let e = bootstrap_expectation(&bins[0], w, &cfg)?;
    let v = bootstrap_variance(&bins[0], w, &cfg)?;
    let d = bootstrap_derivative(&bins[1], &bins[2], h, w, &cfg)?;
    let r = bootstrap_ratio(&bins[0], &bins[1], &bins[2], h, w, &cfg)?;
    let theory = sense(
        &rho,
        &obs,
        &SensingConfig {
            theta_star: a.theta_star,
            h,
            ..Default::default()
        },
        DerivativeMode::Analytic,
    )
    .ok();

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "phi12_rad": a.phi12,
        "observable": obs.label(),
        "weights": obs.weights,
        "theta_star_rad": a.theta_star,
        "shift_rad": h,
        "rate": a.rate,
        "duration": a.duration,
        "bins": a.bins,
        "replicates": a.replicates,
        "expectation": summary_json(&e),
        "single_shot_variance": summary_json(&v),
        "derivative": summary_json(&d),
        "estimator_variance": summary_json(&r),
        "theory": theory,
        "qcrb": 1.0 / qfi_closed_form(a.phi12),
    });
    let mut rows = Vec::new();
    for ((name, t), b) in thetas.iter().zip(&bins) {
        for (i, c) in b.bins().iter().enumerate() {
            rows.push(CountsRow {
                schema_version: SCHEMA_VERSION,
                setting: name,
                theta_rad: *t,
                bin: i,
                pp: c.counts[0],
                pm: c.counts[1],
                mp: c.counts[2],
                mm: c.counts[3],
                duration: c.duration(),
            });
        }
    }
    let counts_path = a
        .counts_out
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".counts.csv"));
    Ok(Outcome {
        artifacts: vec![
            Artifact::json(&a.out, &report)?,
            Artifact::csv(&counts_path, csv_bytes(&rows)?),
        ],
        stdout: None,
        parameters: json!({
            "phi12_rad": a.phi12, "observable": a.observable, "rate": a.rate, "duration": a.duration,
            "bins": a.bins, "theta_star_rad": a.theta_star, "shift_rad": h, "replicates": a.replicates,
        }),
        seed: Some(seed),
    })
}

#[derive(Serialize, Deserialize)]
struct TomoRow {
    schema_version: u32,
    setting_index: usize,
    projector_label: String,
    h1: f64,
    q1: f64,
    h2: f64,
    q2: f64,
    counts: f64,
    duration: f64,
}

pub fn tomo(c: &TomoCommand) -> CliResult<Outcome> {
    match c {
        TomoCommand::Simulate(a) => tomo_simulate(a),
        TomoCommand::Reconstruct(a) => tomo_reconstruct(a),
    }
}

fn tomo_simulate(a: &TomoSimulateArgs) -> CliResult<Outcome> {
    let noise = noise_model(&a.noise)?;
    let seed = a.seed.seed;
    let rho = prepare_state(a.phi12, noise, seed)?;
    let data = simulate_tomography(&rho, a.rate, a.duration, seed, !a.exact)?;
    let rows: Vec<TomoRow> = tomography_settings()
        .iter()
        .zip(&data.records)
        .enumerate()
        .map(|(i, (s, r))| TomoRow {
            schema_version: SCHEMA_VERSION,
            setting_index: i + 1,
            projector_label: s.label(),
            h1: s.h1,
            q1: s.q1,
            h2: s.h2,
            q2: s.q2,
            counts: r.counts,
            duration: r.duration,
        })
        .collect();
    Ok(Outcome {
        artifacts: vec![Artifact::csv(&a.out, csv_bytes(&rows)?)],
        stdout: None,
        parameters: json!({"phi12_rad": a.phi12, "noise": noise, "rate": a.rate, "duration": a.duration, "exact": a.exact}),
        seed: Some(seed),
    })
}

fn read_tomo_csv(path: &Path) -> CliResult<TomographyDataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io(e.to_string()),
        _ => usage(format!("malformed CSV: {e}")),
    })?;
    let settings = tomography_settings();
    let mut records: [Option<TomographyRecord>; N_SETTINGS] = [None; N_SETTINGS];
    for row in r.deserialize::<TomoRow>() {
        let row = row?;
        if row.schema_version != SCHEMA_VERSION {
            return Err(usage(format!(
                "unsupported schema_version {}",
                row.schema_version
            )));
        }
        let i = row.setting_index;
        if !(1..=N_SETTINGS).contains(&i) {
            return Err(usage(format!("setting_index {i} is outside 1..=16")));
        }
        if row.projector_label != settings[i - 1].label() {
            return Err(usage(format!(
                "setting {i} should be {}, found {}",
                settings[i - 1].label(),
                row.projector_label
            )));
        }
        if records[i - 1].is_some() {
            return Err(usage(format!("setting {i} appears twice")));
        }
        records[i - 1] = Some(TomographyRecord {
            counts: row.counts,
            duration: row.duration,
        });
    }
    let mut out = [TomographyRecord {
        counts: 0.0,
        duration: 0.0,
    }; N_SETTINGS];
    for (i, r) in records.iter().enumerate() {
        out[i] = r.ok_or_else(|| usage(format!("setting {} is missing", i + 1)))?;
    }
    TomographyDataset::new(out).map_err(|e| match e {
        wgsense_core::Error::InvalidParameter { .. } => usage(format!("malformed CSV: {e}")),
        other => other.into(),
    })
}

fn tomo_reconstruct(a: &TomoReconstructArgs) -> CliResult<Outcome> {
    let data = read_tomo_csv(&a.input)?;
    let opts = MleOptions {
        likelihood: match a.likelihood {
            LikelihoodArg::Gaussian => Likelihood::Gaussian,
            LikelihoodArg::Poisson => Likelihood::Poisson,
        },
        ..Default::default()
    };
    let target = weighted_graph_state(a.phi12);
    let rep = monte_carlo_report_with(&data, &target, a.mc, a.seed.seed, &opts)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "target_phi12_rad": a.phi12,
        "likelihood": format!("{:?}", opts.likelihood).to_lowercase(),
        "mc_samples": rep.mc_samples,
        "density": density_json(&rep.rho),
        "eigenvalues": rep.rho.eigenvalues(),
        "purity": rep.rho.purity(),
        "fidelity": rep.fidelity,
        "concurrence": rep.concurrence,
    });
    Ok(Outcome {
        artifacts: vec![Artifact::json(&a.out, &report)?],
        stdout: None,
        parameters: json!({
            "input": a.input.display().to_string(), "phi12_rad": a.phi12, "mc": a.mc,
            "likelihood": report["likelihood"],
        }),
        seed: Some(a.seed.seed),
    })
}

#[derive(Serialize)]
struct FringeRow {
    schema_version: u32,
    step: usize,
    varphi_deg: f64,
    varphi_rad: f64,
    counts: f64,
    normalized: f64,
}

/// White-noise weight giving fringe contrast `v`: `V = (1 - p) / (1 - p/2)`.
pub fn depolarizing_for_visibility(v: f64) -> f64 {
    (1.0 - v) / (1.0 - v / 2.0)
}

pub fn fringe(a: &FringeArgs) -> CliResult<Outcome> {
    if a.steps < 4 {
        return Err(usage("--steps must be at least 4"));
    }
    if !(a.visibility > 0.0 && a.visibility <= 1.0) {
        return Err(usage("--visibility must lie in (0, 1]"));
    }
    if !(a.rate.is_finite() && a.rate >= 0.0) || !(a.duration.is_finite() && a.duration > 0.0) {
        return Err(usage("rate must be non-negative and duration positive"));
    }
    let (start, end) = a.varphi_range;
    let p = depolarizing_for_visibility(a.visibility);
    let noise = NoiseModel::new(p, 0.0)?;
    // Photon 1 analyzed in A, photon 2 in H.
    let analyzer = kron_vec(&Pol::A.ket::<f64>(), &Pol::H.ket::<f64>());
    let seed = a.seed.seed;
    let mut xs = Vec::with_capacity(a.steps);
    let mut counts = Vec::with_capacity(a.steps);
    for k in 0..a.steps {
        let phi = start + (end - start) * k as f64 / (a.steps - 1) as f64;
        let rho = apply_noise(&fringe_state(phi), &noise, 0)?;
        let prob = rho.sandwich(&analyzer).clamp(0.0, 1.0);
        let mean = a.rate * a.duration * prob;
        let n = if a.exact {
            mean
        } else {
            let rec = wgsense_core::measurement::simulate_counts(
                &[prob, 1.0 - prob, 0.0, 0.0],
                a.rate,
                a.duration,
                seed.wrapping_add(k as u64),
            )?;
            rec.counts[0] as f64
        };
        xs.push(phi);
        counts.push(n);
    }
    let norm = max_normalize(&counts)?;
    let n_max = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n_min = counts.iter().cloned().fold(f64::INFINITY, f64::min);
    let v_counts = visibility(n_max, n_min)?;
    let fit = cosine_fit(&xs, &norm).map_err(|e| match e {
        wgsense_core::Error::DegenerateData(m) => CliError::Numerical(format!("fit failed: {m}")),
        other => other.into(),
    })?;
    let v_fit = fit.a.abs() / fit.d;
    // Same curve with the step index as abscissa.
    let dx = (end - start) / (a.steps - 1) as f64;
    let per_step = json!({
        "a": fit.a,
        "b": fit.b * dx,
        "c": wgsense_core::wrap_angle(fit.c + fit.b * start),
        "d": fit.d,
    });
    let rows: Vec<FringeRow> = xs
        .iter()
        .zip(counts.iter().zip(&norm))
        .enumerate()
        .map(|(k, (&x, (&c, &y)))| FringeRow {
            schema_version: SCHEMA_VERSION,
            step: k,
            varphi_deg: x.to_degrees(),
            varphi_rad: x,
            counts: c,
            normalized: y,
        })
        .collect();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "model": "a*cos(b*varphi_rad + c) + d on max-normalized counts",
        "fit": fit,
        "fit_per_step": per_step,
        "visibility": v_counts,
        "visibility_fit": v_fit,
        "depolarizing_p": p,
        "steps": a.steps,
    });
    let fit_path = a
        .fit_out
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".fit.json"));
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv(&a.out, csv_bytes(&rows)?),
            Artifact::json(&fit_path, &report)?,
        ],
        stdout: None,
        parameters: json!({
            "varphi_range_rad": [start, end], "steps": a.steps, "rate": a.rate, "duration": a.duration,
            "visibility": a.visibility, "exact": a.exact,
        }),
        seed: (!a.exact).then_some(seed),
    })
}
