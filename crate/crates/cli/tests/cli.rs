//! End-to-end tests of the `wedge` binary: exit codes, output layout,
//! determinism, and the usage-error contract (message on stderr, nothing on
//! stdout).

use std::process::{Command, Output};

fn wedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedge"))
        .args(args)
        .env_remove("WEDGE_THREADS")
        .output()
        .expect("binary spawns")
}

fn wedge_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedge"))
        .args(args)
        .env_remove("WEDGE_THREADS")
        .env(key, value)
        .output()
        .expect("binary spawns")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("stdout parses as JSON")
}

#[test]
fn help_and_version_succeed() {
    let help = wedge(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = stdout_str(&help);
    for sub in [
        "solve",
        "exit-dist",
        "wos-validate",
        "regularity",
        "limits",
        "pv",
        "poisson-reduce",
    ] {
        assert!(text.contains(sub), "help must list `{sub}`");
    }
    let version = wedge(&["--version"]);
    assert_eq!(version.status.code(), Some(0));
    assert!(stdout_str(&version).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_flag_is_usage_error_without_output() {
    let out = wedge(&["solve", "--r", "1", "--theta", "4.0", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty(), "usage errors must not emit output");
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_number_is_usage_error() {
    let out = wedge(&["solve", "--r", "banana", "--theta", "4.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(stderr_str(&out).contains("banana"));
}

#[test]
fn out_of_domain_point_is_usage_error() {
    // theta = 0.3 lies in the excluded quadrant.
    let out = wedge(&["solve", "--r", "1", "--theta", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(stderr_str(&out).contains("error"));

    let neg = wedge(&["solve", "--r", "-1", "--theta", "4.0"]);
    assert_eq!(neg.status.code(), Some(1));
    assert!(stderr_str(&neg).contains("radius"));
}

#[test]
fn invalid_omega_is_usage_error() {
    let out = wedge(&["solve", "--r", "1", "--theta", "2.0", "--omega", "2.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_boundary_function_lists_catalog() {
    let out = wedge(&["pv", "--f0", "sinusoid"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("gaussian"), "error should list valid names: {err}");
}

#[test]
fn solve_json_echoes_config_and_version() {
    let out = wedge(&["solve", "--r", "1", "--theta", "4.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["command"], "solve");
    assert_eq!(v["config"]["f0"], "gaussian");
    assert_eq!(v["config"]["r"], 1.0);
    assert_eq!(v["config"]["seed"], 0);
    assert!(v["config"]["omega"].as_f64().unwrap() > 4.7);
    assert!(v["result"]["quadrature"].is_f64());
    assert!(v["result"]["mc"].is_null());
}

#[test]
fn solve_method_both_reports_agreeing_estimates() {
    let out = wedge(&[
        "solve", "--r", "1", "--theta", "4.0", "--method", "both", "--n", "40000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let quad = v["result"]["quadrature"].as_f64().unwrap();
    let mc = v["result"]["mc"]["value"].as_f64().unwrap();
    let se = v["result"]["mc"]["std_error"].as_f64().unwrap();
    assert!(se > 0.0);
    assert!(
        (quad - mc).abs() <= 5.0 * se,
        "quadrature {quad} vs mc {mc} +- {se}"
    );
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "exit-dist", "--r", "1", "--theta", "4.0", "--n", "400", "--seed", "11",
    ];
    let a = wedge(&args);
    let b = wedge(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn different_seeds_differ() {
    let a = wedge(&["exit-dist", "--r", "1", "--theta", "4.0", "--n", "400", "--seed", "1"]);
    let b = wedge(&["exit-dist", "--r", "1", "--theta", "4.0", "--n", "400", "--seed", "2"]);
    let va = json(&a);
    let vb = json(&b);
    assert_ne!(va["result"]["samples"], vb["result"]["samples"]);
}

#[test]
fn thread_count_does_not_change_results() {
    let base = wedge(&["exit-dist", "--r", "1", "--theta", "4.0", "--n", "600", "--seed", "3"]);
    let two = wedge(&[
        "exit-dist", "--r", "1", "--theta", "4.0", "--n", "600", "--seed", "3", "--threads", "2",
    ]);
    let via_env = wedge_env(
        &["exit-dist", "--r", "1", "--theta", "4.0", "--n", "600", "--seed", "3"],
        "WEDGE_THREADS",
        "2",
    );
    let vb = json(&base);
    let vt = json(&two);
    let ve = json(&via_env);
    assert_eq!(vb["result"], vt["result"]);
    assert_eq!(vb["result"], ve["result"]);
    // The echo records what was requested.
    assert_eq!(vt["config"]["threads"], 2);
    assert_eq!(ve["config"]["threads"], 2);
    assert!(vb["config"]["threads"].is_null());
}

#[test]
fn bad_thread_settings_are_usage_errors() {
    let zero = wedge(&["pv", "--f0", "gaussian", "--threads", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    let env = wedge_env(&["pv", "--f0", "gaussian"], "WEDGE_THREADS", "many");
    assert_eq!(env.status.code(), Some(1));
    assert!(stderr_str(&env).contains("WEDGE_THREADS"));
}

#[test]
fn out_file_matches_stdout_bytes() {
    let dir = std::env::temp_dir().join(format!("wedge-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pv.json");
    let to_stdout = wedge(&["pv", "--f0", "gaussian"]);
    let to_file = wedge(&["pv", "--f0", "gaussian", "--out", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty(), "--out must not also print");
    let written = std::fs::read(&path).unwrap();
    // The config echo records the different destination; the result does not.
    let vs: serde_json::Value = serde_json::from_slice(&to_stdout.stdout).unwrap();
    let vf: serde_json::Value = serde_json::from_slice(&written).unwrap();
    assert_eq!(vs["result"], vf["result"]);
    assert_eq!(vf["config"]["out"], path.to_str().unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn wos_validate_conformal_passes_arc_length_rejects() {
    let ok = wedge(&[
        "wos-validate", "--r", "1", "--theta", "3.926990816987241", "--n", "2000",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["result"]["ks"]["pass"], true);

    let bad = wedge(&[
        "wos-validate",
        "--r",
        "1",
        "--theta",
        "3.926990816987241",
        "--n",
        "2000",
        "--convention",
        "arc-length",
    ]);
    assert_eq!(bad.status.code(), Some(2), "mismatched convention must reject");
    let v = json(&bad);
    assert_eq!(v["result"]["ks"]["pass"], false);
    assert!(!stdout_str(&bad).is_empty(), "rejection still reports the numbers");
}

#[test]
fn exit_dist_csv_layout() {
    let out = wedge(&[
        "exit-dist", "--r", "1", "--theta", "4.0", "--n", "25", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# wedge "));
    assert!(lines[1].starts_with("# config {"));
    assert_eq!(lines[2], "u,x1,x2,arm");
    assert_eq!(lines.len(), 3 + 25, "one row per sample");
    for row in &lines[3..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        fields[0].parse::<f64>().expect("u is numeric");
        assert!(["x_arm", "y_arm", "corner"].contains(&fields[3]));
    }
}

#[test]
fn regularity_csv_has_one_row_per_cell() {
    let out = wedge(&[
        "regularity",
        "--sigma",
        "0.5,0.8",
        "--rho-min",
        "1e-2,1e-3,1e-4",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# wedge "));
    assert!(lines[1].starts_with("# config {"));
    assert_eq!(
        lines[2],
        "sigma,rho_min,i_value,fitted_exponent,extrapolated_limit,verdict,sigma_crit_estimate,failed_cells"
    );
    assert_eq!(lines.len(), 3 + 2 * 3, "sigma grid x rho grid rows");
}

#[test]
fn regularity_json_reports_verdicts() {
    let out = wedge(&["regularity", "--sigma", "0.5,0.9", "--rho-min", "1e-2,1e-3,1e-4,1e-5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let verdicts = v["result"]["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 2);
    assert_eq!(verdicts[0], "finite");
    assert_eq!(verdicts[1], "divergent");
}

#[test]
fn pv_odd_function_vanishes_and_stabilizes() {
    let out = wedge(&["pv", "--f0", "odd_gaussian"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["result"]["value"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["result"]["stabilized"], true);
}

#[test]
fn limits_json_contains_extrapolations() {
    let out = wedge(&["limits", "--f0", "gaussian", "--rho", "1e-2,1e-3,1e-4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["result"];
    assert_eq!(r["rho_grid"].as_array().unwrap().len(), 3);
    assert!(r["i_limit"].as_f64().unwrap().abs() < 1e-3);
    assert!(r["gap"].as_f64().unwrap() < 1e-2);
    assert_eq!(r["converged"], true);
}

#[test]
fn poisson_reduce_emits_trace_rows() {
    let out = wedge(&[
        "poisson-reduce",
        "--center=-1.5,-1.5",
        "--radius",
        "0.5",
        "--arm-length",
        "12",
        "--nodes-per-arm",
        "241",
        "--u-count",
        "41",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[2], "u,value,deriv1,deriv2");
    assert_eq!(lines.len(), 3 + 41);
    // The trace of a symmetric source is symmetric in u.
    let first: Vec<&str> = lines[3].split(',').collect();
    let last: Vec<&str> = lines[3 + 40].split(',').collect();
    let v_lo: f64 = first[1].parse().unwrap();
    let v_hi: f64 = last[1].parse().unwrap();
    assert!((v_lo - v_hi).abs() < 1e-10 * v_lo.abs().max(1.0));
}

#[test]
fn poisson_reduce_scan_is_json_only_extra() {
    let out = wedge(&[
        "poisson-reduce",
        "--center=-1.5,-1.5",
        "--arm-length",
        "12",
        "--nodes-per-arm",
        "241",
        "--u-count",
        "3",
        "--scan",
        "--sigma",
        "0.5,0.9",
        "--rho-min",
        "1e-2,1e-3,1e-4,1e-5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let verdicts = v["result"]["scan"]["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 2);
    assert_eq!(verdicts[1], "divergent");
}
