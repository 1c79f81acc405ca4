use std::process::{Command, Output};

use serde_json::Value;
use witness_core::dtype_map::DTypeMap;
use witness_core::linalg::{hermitian_eig, ComplexMatrix, EIG_TOL};
use witness_core::perm::Permutation;

fn witness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_witness"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn optimal_cyclic_witness() {
    let out = witness(&["check-optimality", "--t", "1", "--pi", "2,3,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["verdict"]["optimal"], true);
    assert_eq!(r["result"]["verdict"]["reason"], "Cyclic_t1");
    assert_eq!(r["finding"], false);
}

#[test]
fn completely_positive_map_is_reported_not_optimal() {
    let out = witness(&["check-optimality", "--t", "2", "--pi", "1,2,3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["verdict"]["optimal"], false);
    assert_eq!(r["result"]["verdict"]["reason"], "CompletelyPositive");
}

#[test]
fn small_t_cyclic_carries_certificate() {
    let r = report(&witness(&["check-optimality", "--t", "0.5"]));
    assert_eq!(r["result"]["verdict"]["reason"], "Certificate_l3_smallt");
    let c = ComplexMatrix::from_json(&r["result"]["verdict"]["certificate"].to_string()).unwrap();
    let s = 0.5f64.sqrt();
    assert_eq!(c, ComplexMatrix::real_diag(&[s, -s, 0.0]));
}

#[test]
fn inequality_scan() {
    let out = witness(&[
        "verify-lemma24",
        "--t",
        "0.5",
        "--samples",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["result"]["scan"]["min_g"].as_f64().unwrap() >= -1e-9);
    assert!(r["result"]["scan"]["min_f_gap"].as_f64().unwrap() >= -1e-9);
    assert_eq!(r["result"]["scan"]["samples"], 100000);
}

#[test]
fn transposition_split_report() {
    let out = witness(&["decompose", "--t", "1.2", "--pi", "2,1,3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let check = &r["result"]["check"];
    assert_eq!(check["ok"], true);
    assert_eq!(check["ppt"], true);
    assert!(check["positive_min_eig"].as_f64().unwrap() >= -1e-10);
    assert_eq!(r["result"]["branch"], "HighT");
    assert!(r["result"]["positive_part"]["data"].is_array());
    assert!(
        r["result"]["unshifted_split"]["positive_part_min_eig"]
            .as_f64()
            .unwrap()
            < -0.1
    );
}

#[test]
fn violation_exits_with_one() {
    let out = witness(&[
        "check-positivity",
        "--t",
        "1.5",
        "--pi",
        "2,3,1",
        "--restarts",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["finding"], true);
    assert_eq!(r["result"]["status"], "ViolationFound");
    assert_eq!(r["result"]["agrees_with_closed_form"], true);
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        &[
            "check-positivity",
            "--t",
            "1.2",
            "--seed",
            "5",
            "--restarts",
            "30",
        ][..],
        &[
            "certificate-sweep",
            "--t",
            "0.4",
            "--samples",
            "3000",
            "--seed",
            "9",
        ][..],
        &["zero-locus", "--t", "1", "--samples", "5000"][..],
        &["verify-lemma24", "--t", "0.3", "--samples", "20000"][..],
    ] {
        let a = witness(args);
        let b = witness(args);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn every_report_has_config_tolerances_and_claim() {
    for args in [
        &["build-witness", "--t", "0.7"][..],
        &["check-cp", "--t", "0.7", "--pi", "1,2,3"][..],
        &["check-optimality", "--t", "0.7"][..],
        &["verify-subcases", "--t", "0.7", "--samples", "50"][..],
        &["certificate-sweep", "--t", "0.7", "--samples", "100"][..],
    ] {
        let r = report(&witness(args));
        assert_eq!(r["command"], args[0]);
        assert_eq!(r["config"]["t"], 0.7);
        assert_eq!(r["config"]["seed"], 42);
        assert!(r["tolerances"]["violation"].is_number());
        assert!(r["paper_claim"].as_str().is_some_and(|s| !s.is_empty()));
        assert!(r["finding"].is_boolean());
    }
}

#[test]
fn detection_from_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = dir.path().join("mixed.json");
    std::fs::write(
        &mixed,
        ComplexMatrix::identity(9).scale_real(1.0 / 9.0).to_json(),
    )
    .unwrap();
    let out = witness(&["detect", "--t", "1", "--rho", mixed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out)["result"]["value"].as_f64().unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-10);

    let w = DTypeMap::new(1.0, Permutation::shift(3))
        .unwrap()
        .choi_matrix();
    let e = hermitian_eig(w.matrix(), EIG_TOL).unwrap();
    let v0 = e.vector(0);
    let pure = dir.path().join("pure.json");
    std::fs::write(&pure, ComplexMatrix::outer(&v0, &v0).to_json()).unwrap();
    let out = witness(&["detect", "--t", "1", "--rho", pure.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!((report(&out)["result"]["value"].as_f64().unwrap() - e.min()).abs() < 1e-10);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, ComplexMatrix::identity(9).to_json()).unwrap();
    assert_eq!(
        witness(&["detect", "--t", "1", "--rho", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = witness(&["check-cp", "--t", "1", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["result"]["completely_positive"], false);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["check-cp"][..],
        &["check-cp", "--t", "0.5", "--n", "5"][..],
        &["check-cp", "--t", "0.5", "--pi", "2,1"][..],
        &["check-cp", "--t", "0.5", "--pi", "1,1,3"][..],
        &["check-optimality", "--t", "1.3"][..],
        &["check-optimality", "--t", "1", "--n", "4"][..],
        &["decompose", "--t", "0.5", "--pi", "2,3,1"][..],
        &["certificate-sweep", "--t", "0.5", "--c", "1.2"][..],
        &["detect", "--t", "1"][..],
        &["probe-subtraction", "--t", "1.2"][..],
        &["no-such-command"][..],
    ] {
        let out = witness(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn probe_finds_subtraction_below_one() {
    let out = witness(&["probe-subtraction", "--t", "0.5", "--trials", "30"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["found"], true);
}

#[test]
fn general_n_witness() {
    let r = report(&witness(&["build-witness", "--t", "1", "--n", "4"]));
    assert_eq!(r["result"]["dim"], serde_json::json!([4, 4]));
    assert_eq!(r["config"]["pi"], "2,3,4,1");
    assert!((r["result"]["trace"].as_f64().unwrap() - 12.0).abs() < 1e-12);
}
