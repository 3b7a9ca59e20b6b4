use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pstchain(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pstchain")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const QPST5: &str = r#"{"n": 5, "onsite": [3.40, 2.60, 2.33, 2.60, 3.40], "couplings": [0.91, 0.91, 0.91, 0.91]}"#;

#[test]
fn simulate_reports_quasi_pst_peak() {
    let dir = TempDir::new().unwrap();
    let chain = write(dir.path(), "chain.json", QPST5);
    let out = dir.path().join("run");
    let res = pstchain(&["simulate", &chain, "--window", "50"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let peaks = json(&out.join("peaks.json"));
    let best = peaks["peaks"]
        .as_array()
        .unwrap()
        .iter()
        .max_by(|a, b| a["F"].as_f64().unwrap().total_cmp(&b["F"].as_f64().unwrap()))
        .unwrap();
    assert!((best["F"].as_f64().unwrap() - 0.9998).abs() < 5e-4);
    assert!((best["t"].as_f64().unwrap() - 8.63).abs() < 0.05);

    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(csv.starts_with("t_Jmax,F,Fav\n"));
    assert_eq!(csv.lines().count(), 10_002);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["inputs"][0], chain.as_str());
}

#[test]
fn simulate_two_sites_raw_time() {
    let dir = TempDir::new().unwrap();
    let chain = write(dir.path(), "c.json", r#"{"n": 2, "onsite": [0, 0], "couplings": [2.0]}"#);
    let res = pstchain(&["simulate", &chain, "--window", "5", "--raw-time"], dir.path());
    assert!(res.status.success());
    let peaks = json(&dir.path().join("peaks.json"));
    let first = &peaks["peaks"][0];
    assert!((first["F"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // t·J = π/2 with J = 2.
    assert!((first["t"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-5);
    assert!(fs::read_to_string(dir.path().join("trace.csv")).unwrap().starts_with("t,F,Fav\n"));
}

#[test]
fn malformed_chain_exits_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"n": 3, "onsite": [0, 0], "couplings": [1]}"#);
    let res = pstchain(&["simulate", &bad], dir.path());
    assert_eq!(res.status.code(), Some(2));
    let garbage = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(pstchain(&["simulate", &garbage], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(pstchain(&["simulate", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(pstchain(&["simulate"], dir.path()).status.code(), Some(2));
}

#[test]
fn reconstruct_pinched_five() {
    let dir = TempDir::new().unwrap();
    let res = pstchain(&["reconstruct", "--pinched", "5", "3", "0.5"], dir.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("roundtrip error"));
    let chain = json(&dir.path().join("chain.json"));
    let eps: Vec<f64> = chain["onsite"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let j: Vec<f64> = chain["couplings"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, b) in eps.iter().zip([3.4, 2.6, 7.0 / 3.0, 2.6, 3.4]) {
        assert!((a - b).abs() < 1e-9, "{eps:?}");
    }
    for (a, b) in j.iter().zip([0.916515, 0.912871, 0.912871, 0.916515]) {
        assert!((a - b).abs() < 1e-6, "{j:?}");
    }
    assert_eq!(chain["sign_convention"], "negative");
}

#[test]
fn reconstruct_three_level_closed_form() {
    let dir = TempDir::new().unwrap();
    let res = pstchain(&["reconstruct", "--pinched", "3", "3", "0.5"], dir.path());
    assert!(res.status.success());
    let chain = json(&dir.path().join("chain.json"));
    let eps1 = chain["onsite"][1].as_f64().unwrap();
    assert!((eps1 - (3.0 + 2.0 + 1.0 / 3.0) / 4.0).abs() < 1e-12);
    assert!((chain["couplings"][0].as_f64().unwrap() - 1.0 / 6f64.sqrt()).abs() < 1e-12);
}

#[test]
fn duplicate_eigenvalues_exit_two() {
    let dir = TempDir::new().unwrap();
    let s = write(dir.path(), "s.json", r#"{"values": [1, 2, 2, 3]}"#);
    let res = pstchain(&["reconstruct", &s], dir.path());
    assert_eq!(res.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
}

#[test]
fn snap_quasi_pst_spectrum() {
    let dir = TempDir::new().unwrap();
    let s = write(dir.path(), "s.json", r#"{"values": [1.006, 2.006, 3.001, 3.994, 4.326]}"#);
    let res = pstchain(&["snap", &s, "--p", "3"], dir.path());
    assert!(res.status.success());
    let report = json(&dir.path().join("snap_report.json"));
    assert!(report["max_shift"].as_f64().unwrap() <= 0.01);
    assert_eq!(report["pst"]["valid"], true);

    let exact = write(dir.path(), "e.json", &format!(r#"{{"values": [1, 2, 3, 4, {}]}}"#, 13.0 / 3.0));
    let out = dir.path().join("exact");
    assert!(pstchain(&["snap", &exact, "--p", "3"], &out).status.success());
    assert!(json(&out.join("snap_report.json"))["max_shift"].as_f64().unwrap() < 1e-12);

    assert_eq!(pstchain(&["snap", &s, "--p", "4"], dir.path()).status.code(), Some(2));
}

#[test]
fn optimize_small_run_and_replay() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "ga.json", r#"{"n": 4, "p": 3, "generations": 6, "population": 32, "window": 20}"#);
    let a = dir.path().join("a");
    let res = pstchain(&["optimize", &cfg, "--seed", "5"], &a);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("generation,best_f,best_Fmax,best_Q,best_sigma"));
    let best: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(best.len(), 7);
    assert!(best.windows(2).all(|w| w[1] >= w[0]), "{best:?}");
    assert_eq!(json(&a.join("manifest.json"))["seed"], 5);
    assert!(a.join("best_chain.json").exists() && a.join("report.json").exists());

    let b = dir.path().join("b");
    let res = pstchain(&["replay", a.join("manifest.json").to_str().unwrap()], &b);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["history.csv", "best_chain.json", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn optimize_zero_generations() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "ga.json", r#"{"n": 5, "generations": 0, "population": 16, "window": 10}"#);
    assert!(pstchain(&["optimize", &cfg], dir.path()).status.success());
    let history = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);

    let unknown = write(dir.path(), "bad.json", r#"{"n": 5, "generation": 3}"#);
    assert_eq!(pstchain(&["optimize", &unknown], dir.path()).status.code(), Some(2));
}

#[test]
fn analyze_pinched_chain() {
    let dir = TempDir::new().unwrap();
    assert!(pstchain(&["reconstruct", "--pinched", "6", "3", "0.5"], dir.path()).status.success());
    let chain = dir.path().join("chain.json");
    let out = dir.path().join("an");
    let res = pstchain(&["analyze", chain.to_str().unwrap()], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let a = json(&out.join("analysis.json"));
    let nodes: Vec<u64> = a["nodes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(nodes, vec![0, 1, 2, 3, 4, 5]);
    assert!(a["ladder_residual"].as_f64().unwrap() < 1e-10);
    assert!(a["commutator_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(a["zero_mode"], false);
    assert_eq!(a["p"], 3);
}

#[test]
fn analyze_quasi_pst_chain_notes_missing_pinch() {
    let dir = TempDir::new().unwrap();
    let chain = write(dir.path(), "c.json", QPST5);
    let res = pstchain(&["analyze", &chain, "--p", "3", "--gamma", "1"], dir.path());
    assert!(res.status.success());
    let a = json(&dir.path().join("analysis.json"));
    assert!(a["ladder_residual"].is_null());
    assert!(!a["notes"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_writes_ordered_csv() {
    let dir = TempDir::new().unwrap();
    let res = pstchain(&["sweep", "--n-min", "4", "--n-max", "8", "--p-list", "5,3"], dir.path());
    assert!(res.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "N,p,std_J,max_rel_spread_J,std_eps,roundtrip_err");
    assert_eq!(rows.len(), 11);
    assert!(rows[1].starts_with("4,3,") && rows[2].starts_with("4,5,"));

    let seq = dir.path().join("seq");
    let res = pstchain(&["sweep", "--n-min", "4", "--n-max", "8", "--p-list", "3,5", "--sequential"], &seq);
    assert!(res.status.success());
    assert_eq!(csv, fs::read_to_string(seq.join("sweep.csv")).unwrap());

    assert_eq!(pstchain(&["sweep", "--p-list", "2"], dir.path()).status.code(), Some(2));
}
