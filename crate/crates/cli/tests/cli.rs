//! End-to-end checks of the sigmak binary: exit codes, artifact formats,
//! and byte-level determinism of repeated runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sigmak() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sigmak"));
    cmd.env_remove("SIGMAK_OUTPUT_DIR");
    cmd
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn solve_config(dir: &Path, out: &Path, family: &str, a: f64, beta: &str) -> std::path::PathBuf {
    let a_field = if family == "perturbed" {
        format!(", \"a\": {a}")
    } else {
        String::new()
    };
    write_config(
        dir,
        "config.json",
        &format!(
            r#"{{
  "n": 3, "k": 2, "beta": {beta},
  "background": {{"family": "{family}"{a_field}}},
  "grid": {{"T": 12.0, "N": 1000}},
  "solver": {{"tol": 1e-10, "max_iter": 25}},
  "output_dir": "{}"
}}"#,
            out.display()
        ),
    )
}

#[test]
fn solve_writes_artifacts_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = solve_config(tmp.path(), &out, "perturbed", 0.01, "\"beta0\"");
    let res = run(sigmak().arg("solve").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    assert_eq!(report["k"], 2);
    assert_eq!(report["n"], 3);
    // Exact field set in declaration order (Value re-sorts, so scan the text).
    let expected = ["converged", "iterations", "residual_history", "beta", "k", "n", "decay_estimate", "cone_ok"];
    assert_eq!(report.as_object().unwrap().len(), expected.len());
    let positions: Vec<usize> = expected
        .iter()
        .map(|key| text.find(&format!("\"{key}\"")).unwrap_or_else(|| panic!("missing {key}")))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "field order {positions:?}");
    let decay = report["decay_estimate"].as_f64().unwrap();
    assert!((3.8..=4.2).contains(&decay), "decay {decay}");

    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.starts_with("i,t,x,f\n"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn trivial_solve_emits_zero_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = solve_config(tmp.path(), &out, "perturbed", 0.0, "\"beta0\"");
    let res = run(sigmak().arg("solve").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f = line.rsplit(',').next().unwrap();
        assert_eq!(f.parse::<f64>().unwrap(), 0.0);
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["iterations"], 0);
    assert!(report["decay_estimate"].is_null());
}

#[test]
fn invalid_configs_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let cfg = solve_config(tmp.path(), &out, "perturbed", 0.01, "-1.0");
    let res = run(sigmak().arg("solve").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("beta"));

    let cfg = write_config(
        tmp.path(),
        "unknown_key.json",
        r#"{"n": 3, "k": 2, "beta": 1.0, "background": {"family": "hyperbolic"},
            "grid": {"T": 12.0, "N": 1000}, "typo_field": 1}"#,
    );
    let res = run(sigmak().arg("solve").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("typo_field"));

    let res = run(sigmak().arg("solve").arg("--config").arg(tmp.path().join("missing.json")));
    assert_eq!(res.status.code(), Some(1));

    // Unknown subcommand / bad flags are usage errors too.
    let res = run(sigmak().arg("frobnicate"));
    assert_eq!(res.status.code(), Some(1));

    let res = run(sigmak().arg("identities").arg("--nmax").arg("13"));
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn nonconvergence_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "hard.json",
        &format!(
            r#"{{
  "n": 3, "k": 2, "beta": "beta0",
  "background": {{"family": "perturbed", "a": 0.01}},
  "grid": {{"T": 12.0, "N": 1000}},
  "solver": {{"tol": 1e-10, "max_iter": 1}},
  "output_dir": "{}"
}}"#,
            out.display()
        ),
    );
    let res = run(sigmak().arg("solve").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(2));
    // The partial report is still written.
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(false));
}

#[test]
fn intersect_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let cfg = solve_config(tmp.path(), &out, "hyperbolic", 0.0, "\"beta0\"");
    let res = run(sigmak().arg("intersect").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(0));

    let cfg = solve_config(tmp.path(), &out, "perturbed", 0.01, "\"beta0\"");
    let res = run(sigmak().arg("intersect").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("intersect.json")).unwrap()).unwrap();
    assert_eq!(report["einstein"], serde_json::Value::Bool(false));
    assert!(report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["constant"] == serde_json::Value::Bool(false)));

    // Dimension sweep: n = 2 passes with three sigma rows.
    let cfg = write_config(
        tmp.path(),
        "n2.json",
        &format!(
            r#"{{
  "n": 2, "k": 1, "beta": "beta0",
  "background": {{"family": "hyperbolic"}},
  "grid": {{"T": 12.0, "N": 1000}},
  "output_dir": "{}"
}}"#,
            out.display()
        ),
    );
    let res = run(sigmak().arg("intersect").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("intersect.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn probe_requires_gammas_and_flags_roots() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "probe.json",
        &format!(
            r#"{{
  "n": 3, "k": 1, "beta": "beta0",
  "background": {{"family": "hyperbolic"}},
  "grid": {{"T": 16.0, "N": 2000}},
  "output_dir": "{}"
}}"#,
            out.display()
        ),
    );

    let res = run(sigmak().arg("probe").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(1));

    // Leading hyphen must parse as a negative weight, not a flag.
    let res = run(sigmak()
        .arg("probe")
        .arg("--config")
        .arg(&cfg)
        .arg("--gamma")
        .arg("-1,2,3,4"));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("probe.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["rows"][0]["gamma"].as_f64().unwrap(), -1.0);
    assert_eq!(doc["rows"][0]["log_flag"], serde_json::Value::Bool(true));

    let res = run(sigmak()
        .arg("probe")
        .arg("--config")
        .arg(&cfg)
        .arg("--gamma")
        .arg("1,2,3,4"));
    assert_eq!(res.status.code(), Some(0));
    let text = fs::read_to_string(out.join("probe.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in &rows[..3] {
        assert_eq!(row["log_flag"], serde_json::Value::Bool(false));
    }
    assert_eq!(rows[3]["log_flag"], serde_json::Value::Bool(true));
    // Rows carry exactly (gamma, weighted_norm, log_flag).
    assert_eq!(rows[0].as_object().unwrap().len(), 3);
    for key in ["gamma", "weighted_norm", "log_flag"] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let cfg = solve_config(tmp.path(), out, "perturbed", 0.01, "\"beta0\"");
        let res = run(sigmak().arg("solve").arg("--config").arg(&cfg));
        assert_eq!(res.status.code(), Some(0));
    }
    for name in ["report.json", "solution.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let overridden = tmp.path().join("override");
    let cfg = solve_config(tmp.path(), &configured, "perturbed", 0.0, "\"beta0\"");
    let mut cmd = sigmak();
    cmd.env("SIGMAK_OUTPUT_DIR", &overridden);
    let res = run(cmd.arg("solve").arg("--config").arg(&cfg));
    assert_eq!(res.status.code(), Some(0));
    assert!(overridden.join("report.json").exists());
    assert!(!configured.exists());
}

#[test]
fn identities_csv_via_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ids");
    let res = run(sigmak()
        .arg("identities")
        .arg("--nmax")
        .arg("12")
        .arg("--out")
        .arg(&out));
    assert_eq!(res.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("identities.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,k,beta0,c_kn,c_kn_printed,gamma_minus,gamma_plus,mismatch"
    );
    let mut total = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let n: usize = fields[0].parse().unwrap();
        let k: usize = fields[1].parse().unwrap();
        let mismatch: bool = fields[7].parse().unwrap();
        assert_eq!(mismatch, 2 * k != n + 1, "row n={n} k={k}");
        total += 1;
    }
    // n = 2..=12, each with n + 1 levels.
    assert_eq!(total, (2..=12).map(|n| n + 1).sum::<usize>());
}
