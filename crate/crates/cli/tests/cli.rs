use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn qnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnet"))
        .args(args)
        .env_remove("QG_THREADS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn interval_spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qnet(&["--out", path(dir.path()), "spectrum", path(&data("interval.json")), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,lambda"));
    let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() <= 1e-3);
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report(&out));
}

#[test]
fn pumpkin_problem_parses_to_pi_lengths() {
    let r = report(&qnet(&["spectrum", path(&data("pumpkin3.json")), "--k", "3"]));
    for e in r["inputs"]["problem"]["edges"].as_array().unwrap() {
        assert!((e["g"].as_f64().unwrap().sqrt() - std::f64::consts::PI).abs() <= 1e-12);
    }
    assert_eq!(r["outputs"]["clusters"][1], serde_json::json!([1, 4]));
    assert_eq!(r["versions"]["mesh_per_edge"], 256);
}

#[test]
fn eigenfunction_samples_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = qnet(&[
        "--out",
        path(dir.path()),
        "spectrum",
        path(&data("loop.json")),
        "--k",
        "2",
        "--mesh-per-edge",
        "16",
        "--eigenfunctions",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("eigenfunctions.csv")).unwrap();
    assert!(csv.starts_with("edge,t,x,u0,u1,u2\n"));
    assert_eq!(csv.lines().count(), 1 + 17);
}

#[test]
fn exit_codes() {
    let bad = qnet(&["spectrum", path(&data("invalid.json"))]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("g must be positive"));
    assert!(bad.stdout.is_empty());

    let missing = qnet(&["spectrum", path(&data("no_such_file.json"))]);
    assert_eq!(missing.status.code(), Some(4));

    let family = qnet(&["oracle", "--family", "tree", "--lengths", "1"]);
    assert_eq!(family.status.code(), Some(2));

    let budget = qnet(&[
        "optimize",
        path(&data("pumpkin3_uneven.json")),
        "--restarts",
        "1",
        "--max-iter",
        "2",
        "--search-mesh",
        "16",
        "--mesh-per-edge",
        "16",
    ]);
    assert_eq!(budget.status.code(), Some(3));
    let r = report(&budget);
    assert_eq!(r["outputs"]["status"], "non_convergence");
    assert_eq!(r["outputs"]["certificate_verdict"]["attempted"], false);
}

#[test]
fn bad_thread_count_is_a_validation_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_qnet"))
        .args(["oracle", "--family", "loop", "--lengths", "1"])
        .env("QG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pumpkin_net_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = qnet(&["--out", path(dir.path()), "net", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let net: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("net.json")).unwrap()).unwrap();
    let arcs = net["arcs"].as_array().unwrap();
    assert_eq!(arcs.len(), 3);
    for arc in arcs {
        for p in arc["samples"].as_array().unwrap() {
            let p: Vec<f64> = p.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert_eq!(p.len(), 3);
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() <= 1e-12);
        }
    }
    assert_eq!(report(&out)["outputs"]["verification"]["passes"], true);

    let again = qnet(&["net", "--input", path(&dir.path().join("net.json"))]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(report(&again)["outputs"]["net"], net);
}

#[test]
fn gradient_with_direction_file() {
    let out = qnet(&[
        "gradient",
        path(&data("pumpkin3_uneven.json")),
        "--dir",
        path(&data("direction.json")),
        "--fd",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let o = &report(&out)["outputs"];
    assert!(o["fd_max_rel_error"].as_f64().unwrap() <= 1e-4);
    assert!(o["norm_grad_check"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn scaling_direction_gives_minus_two_lambda() {
    let o = report(&qnet(&["gradient", path(&data("pumpkin3_uneven.json")), "--kind", "natural"]))["outputs"].clone();
    let lambda = o["lambda"].as_f64().unwrap();
    assert!((o["lo"].as_f64().unwrap() + 2.0 * lambda).abs() <= 1e-8 * lambda);
    assert!(o["normalized"]["lo"].as_f64().unwrap().abs() <= 1e-8 * lambda);
}

#[test]
fn direction_naming_unknown_edge_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("dir.json");
    std::fs::write(&file, r#"{"phi": {"nope": 1.0}}"#).unwrap();
    let out = qnet(&["gradient", path(&data("pumpkin3.json")), "--dir", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flower_immersion_reports_nonconstant_norm() {
    let out = qnet(&["immerse", path(&data("flower3.json")), "--mesh-per-edge", "64"]);
    assert_eq!(out.status.code(), Some(3));
    let o = &report(&out)["outputs"];
    assert_eq!(o["four_lambda"]["verdict"], "present");
    assert!(o["sphere_map"]["error"].as_str().unwrap().contains("not constant"));
}

#[test]
fn flower_thm2_certificate_is_not_found_but_exits_cleanly() {
    let out = qnet(&["certify", path(&data("flower3.json")), "--kind", "thm2", "--mesh-per-edge", "64"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["outputs"]["feasible"], false);
}

#[test]
fn timing_is_opt_in() {
    let args = ["oracle", "--family", "pumpkin", "--lengths", "1,1,1"];
    assert!(report(&qnet(&args)).get("wall_time").is_none());
    let mut timed = vec!["--timing"];
    timed.extend(args);
    assert!(report(&qnet(&timed))["wall_time"].as_f64().unwrap() >= 0.0);
}
