//! End-to-end runs of the `kcm` binary: routing, validation exits,
//! output determinism, and manifest consistency.

use std::path::Path;
use std::process::{Command, Output};

fn kcm_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kcm"))
}

fn kcm(args: &[&str], out_dir: &Path) -> Output {
    kcm_cmd().args(args).arg("--out-dir").arg(out_dir).output().expect("spawn kcm")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn front_outputs_are_deterministic_and_manifested() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let base = ["front", "--p", "0.25", "--horizon", "200", "--replicas", "24", "--seed", "7"];

    let run1 = kcm(&base, &a);
    assert!(run1.status.success(), "{}", stderr_of(&run1));

    // A different thread count must not change any byte of the output.
    let mut with_threads: Vec<&str> = base.to_vec();
    with_threads.extend_from_slice(&["--threads", "2"]);
    let run2 = kcm(&with_threads, &b);
    assert!(run2.status.success(), "{}", stderr_of(&run2));
    let csv_a = std::fs::read(a.join("front_trace.csv")).unwrap();
    assert_eq!(
        csv_a,
        std::fs::read(b.join("front_trace.csv")).unwrap(),
        "same seed must reproduce the trace byte for byte"
    );
    assert_eq!(
        std::fs::read(a.join("front_report.json")).unwrap(),
        std::fs::read(b.join("front_report.json")).unwrap()
    );

    // A different seed must actually change the data.
    let mut reseeded: Vec<&str> = base.to_vec();
    reseeded[8] = "8";
    let run3 = kcm(&reseeded, &c);
    assert!(run3.status.success());
    assert_ne!(csv_a, std::fs::read(c.join("front_trace.csv")).unwrap());

    // The manifest names the run and every file it produced.
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["tool"], "front");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["p"], 0.25);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 3);
    for f in outputs {
        assert!(a.join(f.as_str().unwrap()).exists(), "manifest lists missing file {f}");
    }

    let report = read_json(&a.join("front_report.json"));
    let v_hat = report["velocity"]["v_hat"].as_f64().unwrap();
    assert!(v_hat > 0.0 && v_hat < 1.0, "v_hat = {v_hat}");
    assert!(report["clt"]["ks"].as_f64().unwrap().is_finite());

    let svg = std::fs::read_to_string(a.join("front_traj.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn invalid_density_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["front", "--p", "1.5"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("p must lie in"));
}

#[test]
fn nu_window_above_keep_cap_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["nu", "--p", "0.3", "--window", "600"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn nu_single_replica_output_is_valid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(
        &["nu", "--p", "0.3", "--window", "4", "--times", "20,40", "--replicas", "1"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(tmp.path().join("nu_curves.csv")).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines.len(), 5, "header + one row per offset:\n{csv}");
    for line in &lines[1..] {
        let ci: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ci.is_finite() && ci > 0.0, "single replica must keep finite wide CIs: {line}");
    }
}

#[test]
fn nu_sweep_writes_one_curve_per_density() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(
        &["nu", "--p", "0.2,0.3", "--window", "6", "--times", "30,60", "--replicas", "10"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = read_json(&tmp.path().join("nu_report.json"));
    assert_eq!(report["curves"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(tmp.path().join("nu_curves.csv")).unwrap();
    assert_eq!(csv.trim_end().lines().count(), 1 + 2 * 6);
}

#[test]
fn cutoff_small_l_routes_to_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["cutoff", "--l", "12", "--p", "0.3"], tmp.path());
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("exact"), "routing note expected on stderr");
    assert!(tmp.path().join("cutoff_exact.csv").exists());
    let report = read_json(&tmp.path().join("cutoff_report.json"));
    assert!(report["t_mix"]["t_mix"].as_f64().unwrap() > 0.0);
}

#[test]
fn cutoff_intermediate_l_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["cutoff", "--l", "50", "--p", "0.3"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn cutoff_monte_carlo_produces_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(
        &["cutoff", "--l", "100", "--p", "0.25", "--s=-1,0,1", "--replicas", "60",
          "--v-hat", "0.55", "--sigma-star", "0.4", "--seed", "5"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(tmp.path().join("cutoff_profile.csv")).unwrap();
    assert_eq!(csv.trim_end().lines().count(), 4, "header + one row per s:\n{csv}");
    let report = read_json(&tmp.path().join("cutoff_report.json"));
    for pt in report["points"].as_array().unwrap() {
        let d = pt["d_upper"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn exact_writes_gap_table_and_checks_closed_forms() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["exact", "--l-max", "6"], tmp.path());
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("closed forms"));
    let csv = std::fs::read_to_string(tmp.path().join("gap_table.csv")).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines.len(), 7);
    let gaps: Vec<f64> =
        lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "gap must shrink with L: {gaps:?}");
}

#[test]
fn exact_rejects_l_beyond_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["exact", "--l-max", "30"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
}

#[test]
fn tree_scan_domination_and_critical_densities() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(
        &["tree", "--depths", "0,1,2", "--replicas", "150", "--dh-lo", "1", "--dh-hi", "2",
          "--dh-replicas", "250", "--pc-grid", "--seed", "3"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(tmp.path().join("tree_scan.csv")).unwrap();
    assert_eq!(csv.trim_end().lines().count(), 4);
    let dh = read_json(&tmp.path().join("dekking_host.json"));
    assert_eq!(dh["depth_lo"], 1);
    assert_eq!(dh["depth_hi"], 2);
    let pc = read_json(&tmp.path().join("pc_grid.json"));
    let rows = pc["rows"].as_array().unwrap();
    let half = rows.iter().find(|r| r["k"] == 2 && r["j"] == 2).unwrap();
    assert!((half["p_c"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn tree_rejects_unsupported_constraint_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kcm(&["tree", "--k", "5", "--j", "3"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("j="));
}

#[test]
fn out_dir_env_var_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("from-env");
    let out = kcm_cmd()
        .args(["exact", "--l-max", "2"])
        .env("KCM_OUT_DIR", &dir)
        .output()
        .expect("spawn kcm");
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(dir.join("gap_table.csv").exists());
    assert!(dir.join("manifest.json").exists());
}
