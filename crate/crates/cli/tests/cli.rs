use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonortho")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').filter_map(|c| c.parse().ok()).collect()).collect()
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn coeffs_delta_grid_is_unitary() {
    let csv = stdout(&["coeffs", "--potential", "delta", "--g", "3", "--k", "1:10:100"]);
    assert!(csv.starts_with("k,re_R,im_R,re_T,im_T,unitarity_defect\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 100);
    assert!(r.iter().all(|row| row[5].abs() < 1e-12));
}

#[test]
fn coeffs_free_has_no_reflection() {
    let r = rows(&stdout(&["coeffs", "--potential", "free"]));
    assert!(r.iter().all(|row| row[1] == 0.0 && row[2] == 0.0));
}

#[test]
fn coeffs_square_well_transparent_points() {
    for n in 1..=5 {
        let k = ((n as f64 * std::f64::consts::PI / 10.0).powi(2) + 4.0).sqrt();
        let csv = stdout(&["coeffs", "--potential", "square_well", "--V0", "2", "--a", "10", "--k", &k.to_string()]);
        let row = &rows(&csv)[0];
        assert!(row[1].hypot(row[2]) < 1e-10, "n={n}: {row:?}");
    }
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"potential": {"kind": "delta", "g": 2.0}, "k": "2:2:1"}"#).unwrap();
    let from_cfg = rows(&stdout(&["coeffs", "--config", cfg.to_str().unwrap()]));
    // R = -ig/(k+ig) at k = g = 2 is -(1+i)/2
    assert!((from_cfg[0][1] + 0.5).abs() < 1e-15 && (from_cfg[0][2] + 0.5).abs() < 1e-15);
    let flagged = rows(&stdout(&["coeffs", "--config", cfg.to_str().unwrap(), "--g", "3", "--k", "3"]));
    assert!((flagged[0][1] + 0.5).abs() < 1e-15);
    assert!((flagged[0][0] - 3.0).abs() < 1e-15);
}

#[test]
fn config_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"potential\": {\"kind\": \"free\"},\n  \"typo\": 1\n}").unwrap();
    let out = run(&["coeffs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("typo") && err.contains("line 3"), "{err}");
    assert_eq!(run(&["coeffs", "--potential", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["coeffs", "--k", "1:2"]).status.code(), Some(2));
    assert_eq!(run(&["figure", "7"]).status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_three_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("q.json");
    std::fs::write(&cfg, r#"{"quadrature": {"abs_tol": 1e-14, "rel_tol": 1e-14, "max_subdivisions": 1}}"#).unwrap();
    let target = dir.path().join("fig.csv");
    let out = run(&["figure", "1", "--config", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!target.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn overlap_reports_identity() {
    let csv = stdout(&["overlap", "--potential", "square_well", "--k1", "1.3", "--k2", "0.7", "--x1", "-30", "--x2", "30"]);
    let line = csv.lines().find(|l| l.starts_with("identity_residual,")).unwrap();
    let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!(v < 1e-7);
    let js: serde_json::Value =
        serde_json::from_str(&stdout(&["overlap", "--potential", "delta", "--g", "2", "--k1", "1.5", "--k2", "0.5", "--format", "json"]))
            .unwrap();
    let d = js["delta"].as_array().unwrap();
    assert!(d[0].as_f64().unwrap().hypot(d[1].as_f64().unwrap()) < 1e-12);
    assert!(js["reference"].is_string());
}

#[test]
fn figure_one_records_both_readings() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("fig1.csv");
    stdout(&["figure", "1", "--out", target.to_str().unwrap()]);
    let summary = json_file(&dir.path().join("fig1.csv.summary.json"));
    assert_eq!(summary["convention"], "scaled");
    assert!((summary["area_im"].as_f64().unwrap() - 38.54).abs() / 38.54 < 0.05);
    let readings = summary["readings"].as_array().unwrap();
    assert_eq!(readings.len(), 2);
    assert!(summary["closest"]["convention"].is_string());
    let csv = std::fs::read_to_string(&target).unwrap();
    assert!(csv.starts_with("a_k1hat,a_k2hat,k1,k2,re_delta,im_delta,abs2_delta\n"));
    assert_eq!(csv.lines().count(), 502);

    let alt = dir.path().join("fig1_abs.csv");
    stdout(&["figure", "1", "--k2hat-convention", "absolute", "--out", alt.to_str().unwrap()]);
    let summary = json_file(&dir.path().join("fig1_abs.csv.summary.json"));
    assert_eq!(summary["convention"], "absolute");
    assert!((summary["k2hat"].as_f64().unwrap() - 0.314).abs() < 1e-12);
}

#[test]
fn figure_two_peaks_on_the_first_transparency() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("fig2.csv");
    stdout(&["figure", "2", "--out", target.to_str().unwrap()]);
    let summary = json_file(&dir.path().join("fig2.csv.summary.json"));
    let step = 2.0 * std::f64::consts::PI / 120.0;
    for key in ["a_k1hat", "a_k2hat"] {
        let u = summary["argmax"][key].as_f64().unwrap();
        assert!((u - std::f64::consts::PI).abs() <= 1.01 * step, "{key} = {u}");
    }
}

#[test]
fn packet_traces() {
    let free = rows(&stdout(&["packet", "--potential", "free", "--t", "0:150:16"]));
    assert!(free.iter().all(|r| r[2].abs() < 1e-10));

    let well = rows(&stdout(&["packet", "--potential", "square_well", "--t", "0:150:151"]));
    let at = |t: usize| well[t][2].abs();
    let peak = (40..=60).map(at).fold(0.0, f64::max);
    assert!(at(0) < 1e-6 && at(150) < 1e-6);
    assert!(peak > 1e3 * at(0).max(at(150)).max(1e-6));

    let cmp = stdout(&["packet", "--potential", "square_well", "--t", "40:60:3", "--method", "compare"]);
    assert!(cmp.starts_with("t,N,dNdt_direct,dNdt_net_current_formula,dNdt_stationary_phase,rel_diff\n"));
    for r in rows(&cmp) {
        assert!((r[2] - r[3]).abs() < 1e-12);
    }
}

#[test]
fn swave_packet_runs() {
    let csv = stdout(&[
        "packet", "--channel", "s-wave", "--s0", "unit", "--R0", "40", "--n-points", "201", "--t", "0:80:3",
    ]);
    assert!(rows(&csv).iter().all(|r| r[2].abs() < 1e-10));
    let out = run(&["packet", "--channel", "s-wave", "--method", "stationary-phase"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_identities_passes() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("verify.json");
    stdout(&["verify", "identities", "--format", "json", "--out", target.to_str().unwrap()]);
    let report = json_file(&target);
    assert_eq!(report["pass"], true);
    for c in report["checks"].as_array().unwrap() {
        assert!(c["reference"].is_string());
        if c["name"].as_str().unwrap().starts_with("finite_interval") {
            assert!(c["value"].as_f64().unwrap() < 1e-7);
        }
    }
}

#[test]
fn verify_airy_closure_decreases() {
    let js: serde_json::Value = serde_json::from_str(&stdout(&["verify", "airy", "--format", "json"])).unwrap();
    let errs: Vec<f64> = js["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("closure cutoff"))
        .map(|c| c["value"].as_f64().unwrap())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-2);
}

#[test]
fn regcmp_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("reg.json");
    stdout(&["verify", "regularization", "--format", "json", "--out", target.to_str().unwrap()]);
    let report = json_file(&target);
    assert!(report["regularization_table"]["cutoff_overlaps"].is_array());
    let csv = stdout(&["regcmp", "--lambda", "10,20", "--eps", "0.1,0.05"]);
    assert!(csv.starts_with("kind,parameter,re,im\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("cutoff_kernel_norm2")).count(), 2);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        stdout(&["figure", "3", "--n", "41", "--threads", "1", "--out", p.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let one = stdout(&["packet", "--potential", "delta", "--t", "0:100:5", "--format", "json"]);
    let two = stdout(&["packet", "--potential", "delta", "--t", "0:100:5", "--format", "json"]);
    assert_eq!(one, two);
}
