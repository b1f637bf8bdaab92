use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgsense"))
        .current_dir(dir)
        .env_remove("WGSENSE_SEED")
        .args(args)
        .arg("--no-timestamp")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let o = run(dir, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn state_at_pi_has_minus_half_last_amplitude() {
    let d = tmp();
    ok(
        d.path(),
        &["state", "--phi12", "3.14159265rad", "--out", "g.json"],
    );
    let g = json(&d.path().join("g.json"));
    let amps = g["amplitudes"].as_array().unwrap();
    for (a, want) in amps.iter().zip([0.5, 0.5, 0.5, -0.5]) {
        assert!((f(&a[0]) - want).abs() < 1e-8);
        assert!(f(&a[1]).abs() < 1e-8);
    }
}

#[test]
fn state_at_zero_is_a_product_state() {
    let d = tmp();
    ok(d.path(), &["state", "--phi12", "0", "--out", "g.json"]);
    let g = json(&d.path().join("g.json"));
    assert!(f(&g["concurrence"]).abs() < 1e-12);
    for a in g["amplitudes"].as_array().unwrap() {
        assert!((f(&a[0]) - 0.5).abs() < 1e-15);
    }
}

#[test]
fn pipeline_matches_direct_construction() {
    let d = tmp();
    for phi in ["0", "45", "112.5", "180"] {
        ok(
            d.path(),
            &["state", "--phi12", phi, "--pipeline", "--out", "p.json"],
        );
        let p = json(&d.path().join("p.json"));
        assert!(f(&p["fidelity_to_ideal"]) >= 1.0 - 1e-10, "phi12 = {phi}");
        assert!((f(&p["postselect_probability"]) - 0.5).abs() < 1e-12);
    }
}

#[test]
fn noisy_state_writes_density_only() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "state", "--phi12", "180", "--noise", "0.2", "5", "--seed", "1", "--out", "n.json",
        ],
    );
    let n = json(&d.path().join("n.json"));
    assert!(n["amplitudes"].is_null());
    assert!(f(&n["purity"]) < 1.0);
}

#[test]
fn state_usage_errors_exit_2() {
    let d = tmp();
    assert_eq!(code(d.path(), &["state", "--phi12", "abc"]), 2);
    assert_eq!(code(d.path(), &["state"]), 2);
    assert_eq!(
        code(d.path(), &["state", "--phi12", "0", "--noise", "1.5", "0"]),
        2
    );
}

fn qfi_rows(d: &Path, args: &[&str]) -> Vec<csv::StringRecord> {
    ok(d, args);
    let mut r = csv::Reader::from_path(d.join("q.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec![
            "schema_version",
            "phi12_deg",
            "phi12_rad",
            "qfi",
            "qcrb",
            "sql",
            "hl"
        ]
    );
    r.records().map(Result::unwrap).collect()
}

#[test]
fn qfi_table_endpoints_and_sql() {
    let d = tmp();
    let rows = qfi_rows(d.path(), &["qfi", "--grid", "9", "--out", "q.csv"]);
    assert_eq!(rows.len(), 9);
    let num = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    assert_eq!(num(&rows[0], 3), 1.0);
    assert_eq!(num(&rows[8], 3), 4.0);
    assert_eq!(num(&rows[8], 4), 0.25);
    assert!(rows.iter().all(|r| num(r, 5) == 0.5));

    let single = qfi_rows(d.path(), &["qfi", "--phi12", "pi", "--out", "q.csv"]);
    assert_eq!(single.len(), 1);
    assert_eq!(num(&single[0], 3), 4.0);
}

#[test]
fn qfi_bad_range_exits_2() {
    let d = tmp();
    assert_eq!(code(d.path(), &["qfi", "--grid", "1"]), 2);
    assert_eq!(code(d.path(), &["qfi"]), 2);
    assert_eq!(code(d.path(), &["qfi", "--grid", "3", "--phi12", "0"]), 2);
}

#[test]
fn optimize_pauli_at_pi() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "optimize", "--phi12", "180", "--kind", "pauli", "--out", "o.json",
        ],
    );
    let o = json(&d.path().join("o.json"));
    assert_eq!(o["observable"], "ZY");
    assert!((f(&o["result"]["estimator_variance"]) - 0.25).abs() < 1e-9);
    for photon in o["waveplates"].as_array().unwrap() {
        for k in ["plus", "minus"] {
            assert!(f(&photon[k]["residual"]) < 1e-8);
        }
    }
}

#[test]
fn optimize_general_at_five_pi_eighths() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "optimize", "--phi12", "5pi/8", "--kind", "general", "--seed", "7", "--out", "o.json",
        ],
    );
    let o = json(&d.path().join("o.json"));
    assert!((f(&o["result"]["estimator_variance"]) - 0.32).abs() <= 0.01);
    assert_eq!(o["axis_angles_deg"].as_array().unwrap().len(), 4);
}

#[test]
fn optimize_is_reproducible() {
    let d = tmp();
    let args = |out: &'static str| {
        [
            "optimize", "--phi12", "135", "--kind", "general", "--seed", "11", "--out", out,
        ]
    };
    ok(d.path(), &args("a.json"));
    ok(d.path(), &args("b.json"));
    let a = std::fs::read(d.path().join("a.json")).unwrap();
    let b = std::fs::read(d.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_falls_back_to_environment() {
    let d = tmp();
    let with_env = |out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_wgsense"))
            .current_dir(d.path())
            .env("WGSENSE_SEED", "5")
            .args(["fringe", "--steps", "8", "--out", out, "--no-timestamp"])
            .output()
            .unwrap();
        assert!(o.status.success());
    };
    with_env("env.csv");
    ok(
        d.path(),
        &["fringe", "--steps", "8", "--seed", "5", "--out", "flag.csv"],
    );
    ok(
        d.path(),
        &[
            "fringe",
            "--steps",
            "8",
            "--seed",
            "6",
            "--out",
            "other.csv",
        ],
    );
    let read = |p: &str| std::fs::read(d.path().join(p)).unwrap();
    assert_eq!(read("env.csv"), read("flag.csv"));
    assert_ne!(read("env.csv"), read("other.csv"));
    assert_eq!(json(&d.path().join("env.csv.manifest.json"))["seed"], 5);
}

#[test]
fn sense_at_pi_with_zy() {
    let d = tmp();
    ok(
        d.path(),
        &[
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
            "--seed",
            "1",
            "--out",
            "s.json",
        ],
    );
    let s = json(&d.path().join("s.json"));
    let r = &s["estimator_variance"];
    assert!(f(&r["ci_low"]) <= 0.25 && 0.25 <= f(&r["ci_high"]), "{r}");
    let counts = std::fs::read_to_string(d.path().join("s.json.counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 1 + 3 * 6);
    let m = json(&d.path().join("s.json.manifest.json"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn sense_at_zero_with_iy() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "sense",
            "--phi12",
            "0",
            "--observable",
            "IY",
            "--seed",
            "1",
            "--out",
            "s.json",
        ],
    );
    let r = &json(&d.path().join("s.json"))["estimator_variance"];
    assert!(f(&r["ci_low"]) <= 1.0 && 1.0 <= f(&r["ci_high"]), "{r}");
}

#[test]
fn sense_without_counts_exits_3() {
    let d = tmp();
    assert_eq!(
        code(
            d.path(),
            &["sense", "--phi12", "180", "--rate", "0", "--out", "s.json"]
        ),
        3
    );
    assert!(!d.path().join("s.json").exists());
}

#[test]
fn sense_rejects_bad_observable() {
    let d = tmp();
    assert_eq!(
        code(
            d.path(),
            &[
                "sense",
                "--phi12",
                "180",
                "--observable",
                "QQ",
                "--out",
                "s.json"
            ]
        ),
        2
    );
}

#[test]
fn tomography_round_trip_exact() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "tomo", "simulate", "--phi12", "180", "--exact", "--out", "t.csv",
        ],
    );
    ok(
        d.path(),
        &[
            "tomo",
            "reconstruct",
            "--in",
            "t.csv",
            "--phi12",
            "180",
            "--out",
            "r.json",
        ],
    );
    let r = json(&d.path().join("r.json"));
    assert!(f(&r["fidelity"]["value"]) >= 0.999);
    assert_eq!(r["mc_samples"], 100);
}

#[test]
fn tomography_of_uniform_counts_is_unentangled() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "tomo", "simulate", "--phi12", "180", "--exact", "--out", "t.csv",
        ],
    );
    let text = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    let mut w = csv::Writer::from_path(d.path().join("u.csv")).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    w.write_record(r.headers().unwrap()).unwrap();
    for rec in r.records() {
        let mut rec: Vec<String> = rec.unwrap().iter().map(str::to_string).collect();
        rec[7] = "375".into();
        w.write_record(&rec).unwrap();
    }
    w.flush().unwrap();
    ok(
        d.path(),
        &[
            "tomo",
            "reconstruct",
            "--in",
            "u.csv",
            "--mc",
            "10",
            "--out",
            "r.json",
        ],
    );
    let r = json(&d.path().join("r.json"));
    assert!(f(&r["concurrence"]["value"]) < 1e-6);
}

#[test]
fn malformed_tomography_csv_exits_2() {
    let d = tmp();
    std::fs::write(
        d.path().join("bad.csv"),
        "schema_version,setting_index\n1,2\n",
    )
    .unwrap();
    assert_eq!(
        code(
            d.path(),
            &["tomo", "reconstruct", "--in", "bad.csv", "--out", "r.json"]
        ),
        2
    );

    ok(
        d.path(),
        &[
            "tomo", "simulate", "--phi12", "90", "--exact", "--out", "t.csv",
        ],
    );
    let text = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    let short: Vec<&str> = text.lines().take(10).collect();
    std::fs::write(d.path().join("short.csv"), short.join("\n")).unwrap();
    assert_eq!(
        code(
            d.path(),
            &[
                "tomo",
                "reconstruct",
                "--in",
                "short.csv",
                "--out",
                "r.json"
            ]
        ),
        2
    );
    let relabeled = text.replacen(",HH,", ",DD,", 1);
    std::fs::write(d.path().join("relabeled.csv"), relabeled).unwrap();
    assert_eq!(
        code(
            d.path(),
            &[
                "tomo",
                "reconstruct",
                "--in",
                "relabeled.csv",
                "--out",
                "r.json"
            ]
        ),
        2
    );
    let negative = text.replacen(",375.0,", ",-1.0,", 1);
    std::fs::write(d.path().join("negative.csv"), negative).unwrap();
    assert_eq!(
        code(
            d.path(),
            &[
                "tomo",
                "reconstruct",
                "--in",
                "negative.csv",
                "--out",
                "r.json"
            ]
        ),
        2
    );
}

#[test]
fn noiseless_fringe() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "fringe",
            "--varphi-range",
            "0:360",
            "--steps",
            "37",
            "--exact",
            "--out",
            "f.csv",
        ],
    );
    let fit = json(&d.path().join("f.csv.fit.json"));
    assert!((f(&fit["visibility"]) - 1.0).abs() < 1e-12);
    assert!((f(&fit["fit"]["a"]).abs() - 0.5).abs() < 1e-6);
    assert!((f(&fit["fit"]["d"]) - 0.5).abs() < 1e-6);
}

#[test]
fn fringe_with_reduced_contrast() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "fringe",
            "--visibility",
            "0.83",
            "--rate",
            "150",
            "--seed",
            "4",
            "--out",
            "f.csv",
        ],
    );
    let v = f(&json(&d.path().join("f.csv.fit.json"))["visibility"]);
    assert!((v - 0.83).abs() <= 0.02, "V = {v}");
}

#[test]
fn fringe_recovers_per_step_parameters() {
    // a cos(b k + c) + d with a < 0 is the law (1 + cos varphi)/2 at
    // varphi = b k + c + pi.
    let (a, b, c, dd): (f64, f64, f64, f64) = (-0.445, 0.235, 0.0662, 0.531);
    let steps = 30;
    let start = c + std::f64::consts::PI;
    let end = start + b * (steps - 1) as f64;
    let range = format!("{start}rad:{end}rad");
    let v = a.abs() / dd;
    let d = tmp();
    ok(
        d.path(),
        &[
            "fringe",
            "--varphi-range",
            &range,
            "--steps",
            "30",
            "--visibility",
            &v.to_string(),
            "--rate",
            "150",
            "--seed",
            "9",
            "--out",
            "f.csv",
        ],
    );
    let p = &json(&d.path().join("f.csv.fit.json"))["fit_per_step"];
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    assert!(rel(f(&p["a"]), a) < 0.05, "{p}");
    assert!(rel(f(&p["b"]), b) < 0.05, "{p}");
    assert!(rel(f(&p["d"]), dd) < 0.05, "{p}");
    assert!((f(&p["c"]) - c).abs() < 0.05, "{p}");
}

#[test]
fn fringe_needs_four_steps() {
    let d = tmp();
    assert_eq!(
        code(d.path(), &["fringe", "--steps", "3", "--out", "f.csv"]),
        2
    );
}

#[test]
fn manifest_lists_every_output_with_digest() {
    let d = tmp();
    ok(
        d.path(),
        &[
            "fringe",
            "--exact",
            "--out",
            "f.csv",
            "--manifest",
            "run.json",
        ],
    );
    let m = json(&d.path().join("run.json"));
    assert_eq!(m["command"], "fringe");
    assert!(m.get("timestamp_unix").is_none());
    for o in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(d.path().join(o["path"].as_str().unwrap())).unwrap();
        use sha2::Digest;
        assert_eq!(o["sha256"], hex::encode(sha2::Sha256::digest(&bytes)));
    }
}
