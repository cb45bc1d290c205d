use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qrem_core::distances::operational_distance_exact;
use qrem_core::io::PovmFile;
use qrem_core::{fixtures, Povm};
use serde_json::Value;
use tempfile::TempDir;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn povm_fixture(name: &str) -> PathBuf {
    fixture_dir().join("povm").join(format!("{name}.json"))
}

fn qrem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrem"))
        .args(args)
        .output()
        .expect("qrem should run")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn read_povm(p: &Path) -> Povm {
    let file: PovmFile = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    file.to_povm().unwrap()
}

fn close(v: &Value, want: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() <= tol
}

fn characterize(dir: &TempDir, povms: &[&str], extra: &[&str]) -> PathBuf {
    let out = dir.path().join("char.json");
    let mut args = vec!["characterize".to_string()];
    for p in povms {
        args.push("--povm".into());
        args.push(path_str(&povm_fixture(p)).into());
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    args.extend(["-o".into(), path_str(&out).into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = qrem(&refs);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn write_counts(dir: &TempDir, name: &str, counts: &str, shots: u64, qubits: usize) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(
        &p,
        format!(
            r#"{{"format_version": 1, "qubits": {qubits}, "shots": {shots}, "counts": {counts}}}"#
        ),
    )
    .unwrap();
    p
}

#[test]
fn fit_bundled_sampled_calibration() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fit.json");
    let report = dir.path().join("fit-report.json");
    let cal = fixture_dir().join("calibration/ibm-q0-sampled.json");
    let o = qrem(&[
        "fit",
        "--calibration",
        path_str(&cal),
        "-o",
        path_str(&out),
        "--report",
        path_str(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = operational_distance_exact(&read_povm(&out), &fixtures::ibm(0)).unwrap();
    assert!(d <= 0.01, "D_op = {d}");
    let r = read_json(&report);
    assert_eq!(r["kind"], "fit");
    assert_eq!(r["result"]["diagnostics"]["converged"], true);
    assert_eq!(
        r["provenance"]["inputs"][0]["sha256"]
            .as_str()
            .unwrap()
            .len(),
        64
    );
}

#[test]
fn fit_noiseless_calibration_is_exact() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fit.json");
    let cal = fixture_dir().join("calibration/ibm-q0-exact.json");
    let o = qrem(&["fit", "--calibration", path_str(&cal), "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = operational_distance_exact(&read_povm(&out), &fixtures::ibm(0)).unwrap();
    assert!(d <= 1e-6, "D_op = {d}");

    let o = qrem(&[
        "fit",
        "--calibration",
        path_str(&cal),
        "--probe-set",
        "minimal",
        "-o",
        path_str(&out),
    ]);
    assert!(o.status.success());
    assert!(operational_distance_exact(&read_povm(&out), &fixtures::ibm(0)).unwrap() <= 1e-6);
}

#[test]
fn fit_rejects_inconsistent_counts() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(fixture_dir().join("calibration/ibm-q0-exact.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["records"][3]["shots"] = Value::from(12);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, v.to_string()).unwrap();
    let o = qrem(&["fit", "--calibration", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("record 3"), "{err}");
}

#[test]
fn fit_without_convergence_exits_numerical() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fit.json");
    let cal = fixture_dir().join("calibration/ibm-q0-sampled.json");
    let o = qrem(&[
        "fit",
        "--calibration",
        path_str(&cal),
        "--max-iter",
        "1",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.exists());
}

#[test]
fn characterize_q0() {
    let dir = TempDir::new().unwrap();
    let r = read_json(&characterize(&dir, &["ibm-q0"], &[]))["result"].clone();
    assert!(close(&r["distance_to_ideal"]["lower"], 0.137, 1e-3));
    assert!(close(&r["coherent_distance"]["upper"], 0.004, 1e-12));
    assert!(close(
        &r["infinite_statistics_delta"],
        1.1 / 0.826 * 0.004,
        1e-12
    ));
    assert!(close(&r["norm_1to1"], 1.1 / 0.826, 1e-12));
}

#[test]
fn characterize_projective_is_trivial() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("proj.json");
    fs::write(
        &p,
        qrem_core::io::to_json(&PovmFile::from_povm(
            &qrem_core::povm::projective_computational(1),
            None,
        )),
    )
    .unwrap();
    let out = dir.path().join("c.json");
    let o = qrem(&["characterize", "--povm", path_str(&p), "-o", path_str(&out)]);
    assert!(o.status.success());
    let r = read_json(&out)["result"].clone();
    assert_eq!(r["distance_to_ideal"]["upper"], 0.0);
    assert_eq!(r["coherent_distance"]["upper"], 0.0);
    assert_eq!(r["correction"], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
}

#[test]
fn characterize_five_qubit_product_reports_bounds() {
    let dir = TempDir::new().unwrap();
    let names = ["ibm-q0", "ibm-q1", "ibm-q2", "ibm-q3", "ibm-q4"];
    let r = read_json(&characterize(&dir, &names, &["--subsets", "2048"]))["result"].clone();
    assert_eq!(r["outcomes"], 32);
    for key in ["distance_to_ideal", "coherent_distance"] {
        assert_eq!(r[key]["method"], "combined");
        assert!(r[key]["lower"].as_f64().unwrap() <= r[key]["upper"].as_f64().unwrap());
    }
    // coherent parts are small per qubit: the subadditive upper bound stays small
    assert!(r["coherent_distance"]["upper"].as_f64().unwrap() < 0.05);
}

#[test]
fn mitigate_with_identity_correction_passes_frequencies() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("proj.json");
    fs::write(
        &p,
        qrem_core::io::to_json(&PovmFile::from_povm(
            &qrem_core::povm::projective_computational(1),
            None,
        )),
    )
    .unwrap();
    let ch = dir.path().join("c.json");
    assert!(
        qrem(&["characterize", "--povm", path_str(&p), "-o", path_str(&ch)])
            .status
            .success()
    );
    let counts = write_counts(&dir, "counts.json", r#"{"0": 300, "1": 700}"#, 1000, 1);
    let out = dir.path().join("m.json");
    let o = qrem(&[
        "mitigate",
        "--counts",
        path_str(&counts),
        "--correction",
        path_str(&ch),
        "-o",
        path_str(&out),
    ]);
    // D_op = 0 leaves nothing to beat, so the verdict fails
    assert_eq!(o.status.code(), Some(3));
    let r = read_json(&out)["result"].clone();
    assert_eq!(r["corrected"], serde_json::json!([0.3, 0.7]));
    assert_eq!(r["budget"]["alpha"], 0.0);
}

#[test]
fn mitigate_q0_end_to_end() {
    let dir = TempDir::new().unwrap();
    let ch = characterize(&dir, &["ibm-q0"], &[]);
    let counts = write_counts(&dir, "counts.json", r#"{"0": 1300, "1": 6892}"#, 8192, 1);
    let out = dir.path().join("m.json");
    let o = qrem(&[
        "mitigate",
        "--counts",
        path_str(&counts),
        "--correction",
        path_str(&ch),
        "-o",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = read_json(&out)["result"].clone();
    assert_eq!(r["successful"], true);
    assert!(close(&r["budget"]["delta"], 0.0293, 1e-4));
    assert!(close(&r["rhs_bound"], 0.155, 1e-3));

    let counts = write_counts(&dir, "low.json", r#"{"0": 8000, "1": 192}"#, 8192, 1);
    let o = qrem(&[
        "mitigate",
        "--counts",
        path_str(&counts),
        "--correction",
        path_str(&ch),
        "-o",
        path_str(&out),
    ]);
    assert!(o.status.success());
    let r = read_json(&out)["result"].clone();
    assert_eq!(r["projection_applied"], true);
    assert!(r["budget"]["alpha"].as_f64().unwrap() > 0.0);

    let o = qrem(&[
        "mitigate",
        "--counts",
        path_str(&counts),
        "--correction",
        path_str(&ch),
        "--dop-bound",
        "0",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(read_json(&out)["result"]["successful"], false);
}

#[test]
fn mitigate_shape_mismatch_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let ch = characterize(&dir, &["ibm-q0"], &[]);
    let counts = write_counts(
        &dir,
        "c.json",
        r#"{"00": 1, "01": 1, "10": 1, "11": 1}"#,
        4,
        2,
    );
    let o = qrem(&[
        "mitigate",
        "--counts",
        path_str(&counts),
        "--correction",
        path_str(&ch),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let povm = povm_fixture("ibm-q0");
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let report = dir.path().join(format!("{tag}.json"));
        let o = qrem(&[
            "simulate-f",
            "--povm",
            path_str(&povm),
            "--trials",
            "500",
            "--seed",
            "42",
            "--z-sweep",
            "0,0.05,0.1",
            "--csv",
            path_str(&csv),
            "-o",
            path_str(&report),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(csv).unwrap(), fs::read(report).unwrap())
    };
    let (a_csv, a_rep) = run("a");
    let (b_csv, b_rep) = run("b");
    assert_eq!(a_csv, b_csv);
    let text = String::from_utf8(a_csv).unwrap();
    assert!(text.starts_with("z,ratio,f,mean_alpha,"));
    assert_eq!(text.lines().count(), 4);
    assert!(!text.contains('\r'));
    let (a, b) = (
        serde_json::from_slice::<Value>(&a_rep).unwrap(),
        serde_json::from_slice::<Value>(&b_rep).unwrap(),
    );
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["provenance"]["seed"], 42);
}

#[test]
fn simulate_single_trial_smoke() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = qrem(&[
        "simulate-f",
        "--povm",
        path_str(&povm_fixture("ibm-q0")),
        "--trials",
        "1",
        "-o",
        path_str(&out),
    ]);
    assert!(o.status.success());
    let f = read_json(&out)["result"][0]["report"]["f"]
        .as_f64()
        .unwrap();
    assert!(f == 0.0 || f == 1.0);
}

#[test]
fn simulate_rejects_infeasible_sweep_point() {
    let o = qrem(&[
        "simulate-f",
        "--povm",
        path_str(&povm_fixture("ibm-q0")),
        "--trials",
        "1",
        "--z-sweep",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid POVM"));
}

#[test]
fn fixture_export_matches_bundled_files() {
    let dir = TempDir::new().unwrap();
    assert!(qrem(&["fixture", "export", "--dir", path_str(dir.path())])
        .status
        .success());
    for fx in fixtures::all() {
        let name = format!("{}.json", fx.name);
        assert_eq!(
            fs::read(dir.path().join(&name)).unwrap(),
            fs::read(fixture_dir().join("povm").join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qrem(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(qrem(&["fit"]).status.code(), Some(1));
    assert_eq!(qrem(&["--help"]).status.code(), Some(0));
}
