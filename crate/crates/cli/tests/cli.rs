use std::path::Path;
use std::process::{Command, Output};

fn qfeedback(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfeedback"))
        .args(args)
        .env_remove("QFEEDBACK_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let body = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, body)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn protocol_columns_and_helstrom_value() {
    let (h, body) = rows(&qfeedback(&["protocol", "--theta", "0.715", "--p", "0.145", "--scheme", "helstrom"]));
    assert_eq!(
        h,
        [
            "schema_version", "scheme", "input", "theta", "p", "chi", "cos_chi", "eta", "fidelity",
            "bloch_x", "bloch_y", "bloch_z", "prob_plus", "prob_minus", "mc_fidelity", "mc_stderr",
            "mc_shots"
        ]
    );
    let avg = body.iter().find(|r| r[col(&h, "input")] == "avg").unwrap();
    assert!((num(&avg[col(&h, "fidelity")]) - 0.9344).abs() < 5e-4);
    assert!(body.iter().all(|r| r[0] == "1"));
}

#[test]
fn protocol_trivial_and_optimal_rows() {
    let (h, body) = rows(&qfeedback(&["protocol", "--p", "0", "--scheme", "dn"]));
    assert!((num(&body[2][col(&h, "fidelity")]) - 1.0).abs() < 1e-12);

    let (h, body) = rows(&qfeedback(&["protocol", "--scheme", "optimal"]));
    let avg = &body[2];
    assert!((num(&avg[col(&h, "fidelity")]) - 0.955).abs() < 1e-3);
    assert!((num(&avg[col(&h, "cos_chi")]) - 0.90).abs() < 5e-3);
}

#[test]
fn protocol_degrees_flag_matches_radians() {
    let deg = 0.715f64.to_degrees().to_string();
    let (_, a) = rows(&qfeedback(&["protocol", "--theta", &deg, "--degrees"]));
    let (_, b) = rows(&qfeedback(&["protocol", "--theta", "0.715"]));
    let f = |r: &Vec<Vec<String>>| num(&r[2][8]);
    assert!((f(&a) - f(&b)).abs() < 1e-12);
}

#[test]
fn protocol_custom_scheme() {
    let (h, body) = rows(&qfeedback(&["protocol", "--cos-chi", "0.5", "--eta", "0.3"]));
    assert_eq!(body[0][col(&h, "scheme")], "custom");
    assert!((num(&body[0][col(&h, "cos_chi")]) - 0.5).abs() < 1e-12);
    assert_eq!(qfeedback(&["protocol", "--chi", "0.5"]).status.code(), Some(2));
    assert_eq!(qfeedback(&["protocol", "--scheme", "dn", "--eta", "0.1"]).status.code(), Some(2));
}

#[test]
fn monte_carlo_needs_seed_and_is_deterministic() {
    assert_eq!(qfeedback(&["protocol", "--shots", "100"]).status.code(), Some(2));
    let a = qfeedback(&["protocol", "--shots", "2000", "--seed", "9"]);
    let b = qfeedback(&["protocol", "--shots", "2000", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (h, body) = rows(&a);
    assert_eq!(body[2][col(&h, "mc_shots")], "2000");
}

#[test]
fn sweep_columns_and_summary_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let out = qfeedback(&[
        "sweep", "--n-theta", "40", "--n-p", "30", "--output", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["schema_version", "theta", "p", "chi_opt", "cos_chi_opt", "eta_opt", "f_opt", "f_dn", "f_h", "f_diff"]
    );
    assert_eq!(r.records().count(), 1200);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("grid.summary.json")).unwrap()).unwrap();
    let best = &summary["summary"]["max_improvement"];

    // dense scan of the improvement around the peak
    let f_diff = |t: f64, p: f64| {
        let (c2, s4, q) = (t.cos().powi(2), t.sin().powi(4), 1.0 - 2.0 * p);
        let opt = 0.5 + 0.5 * (c2 + s4 / (1.0 - q * q * c2)).sqrt();
        opt - (1.0 - p * c2).max(0.5 + 0.5 * (s4 + c2).sqrt())
    };
    let mut oracle = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..=400 {
        for j in 0..=400 {
            let (t, p) = (0.65 + 0.12 * i as f64 / 400.0, 0.09 + 0.05 * j as f64 / 400.0);
            let f = f_diff(t, p);
            if f > oracle.2 {
                oracle = (t, p, f);
            }
        }
    }
    assert!((best["theta"].as_f64().unwrap() - oracle.0).abs() < 2e-3, "{best} vs {oracle:?}");
    assert!((best["p"].as_f64().unwrap() - oracle.1).abs() < 1e-3, "{best} vs {oracle:?}");
    assert!(best["f_diff"].as_f64().unwrap() >= oracle.2 - 1e-9);
    assert_eq!(summary["schema_version"], 1);
}

#[test]
fn json_envelope_shape() {
    let out = qfeedback(&["sweep", "--n-theta", "3", "--n-p", "2", "--format", "json", "--crossover-points", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["schema_version", "tool", "version", "command", "config", "timestamp", "rows", "summary"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["tool"], "qfeedback");
    assert_eq!(v["command"], "sweep");
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(v["config"]["n_theta"], 3);
    assert_eq!(v["summary"]["crossover"].as_array().unwrap().len(), 3);
}

#[test]
fn experiment_model_defaults_and_ideal_gate() {
    let (h, body) = rows(&qfeedback(&["experiment-model"]));
    assert_eq!(
        h,
        [
            "schema_version", "cos_chi", "chi", "eta", "fidelity_ideal", "fidelity_model",
            "fidelity_plus", "fidelity_minus", "bloch_plus_x", "bloch_plus_y", "bloch_plus_z",
            "bloch_minus_x", "bloch_minus_y", "bloch_minus_z", "success_probability"
        ]
    );
    assert_eq!(body.len(), 3);
    assert!(num(&body[1][col(&h, "fidelity_model")]) > 0.9344);

    let third = (1.0f64 / 3.0).to_string();
    let (h, body) = rows(&qfeedback(&["experiment-model", "--rh", &third, "--rv", "1.0", "--scan", "21"]));
    for r in &body {
        let d = num(&r[col(&h, "fidelity_model")]) - num(&r[col(&h, "fidelity_ideal")]);
        assert!(d.abs() < 1e-10, "{d}");
    }
}

#[test]
fn tomography_is_deterministic_and_writes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    let args = |seed: &str| {
        vec![
            "tomography".to_string(),
            "--seed".into(),
            seed.into(),
            "--resamples".into(),
            "200".into(),
            "--counts-output".into(),
            counts.to_str().unwrap().into(),
        ]
    };
    let run = |seed: &str| {
        let a = args(seed);
        qfeedback(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let a = run("5");
    let counts_a = std::fs::read(&counts).unwrap();
    let b = run("5");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(counts_a, std::fs::read(&counts).unwrap());
    assert_ne!(a.stdout, run("6").stdout);

    let (h, body) = rows(&a);
    assert_eq!(
        h,
        [
            "schema_version", "input", "fidelity_true", "fidelity", "bootstrap_mean", "stderr",
            "resamples", "bloch_x", "bloch_y", "bloch_z", "min_eigenvalue", "physical",
            "fidelity_clipped"
        ]
    );
    assert_eq!(body.len(), 3);

    let mut r = csv::Reader::from_path(&counts).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["schema_version", "input", "preparation", "setting", "counts", "duration"]
    );
    // two inputs, three preparations, six settings
    assert_eq!(r.records().count(), 36);
}

#[test]
fn tomography_requires_seed() {
    assert_eq!(qfeedback(&["tomography"]).status.code(), Some(2));
}

#[test]
fn validation_errors_leave_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let out = qfeedback(&["protocol", "--p", "0.7", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!path.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    assert_eq!(qfeedback(&["sweep", "--n-theta", "1"]).status.code(), Some(2));
    assert_eq!(qfeedback(&["experiment-model", "--rh", "1.5"]).status.code(), Some(2));
    assert_eq!(qfeedback(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let out = qfeedback(&["protocol", "--output", "/nonexistent-dir/x/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qfeedback"))
        .args(["protocol", "--format", "json"])
        .env("QFEEDBACK_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = dir.path().join("protocol.json");
    assert!(Path::new(&written).exists());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(written).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}
