use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use poincare::degrees::{degree, DegreeKind};
use poincare::io::{load_state, save_state};
use poincare::multipoles::multipoles;
use poincare::phase_space::SphereGrid;
use poincare::states::{noon, su2_coherent};
use poincare::{Direction, HalfSpin, PolarizationSector};
use serde_json::Value;
use tempfile::TempDir;

fn poincare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poincare")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = poincare(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    v
}

fn write_state(dir: &TempDir, name: &str, sec: &PolarizationSector) -> PathBuf {
    let p = dir.path().join(name);
    save_state(sec, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn degree_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let sec = PolarizationSector::single(su2_coherent(HalfSpin::integer(1), Direction::new(0.3, 0.2)));
    let path = write_state(&dir, "coh.json", &sec);
    let v = ok(&["degree", "--kind", "hs", "--state", s(&path)]);
    let want = degree(&sec, DegreeKind::HilbertSchmidt).unwrap().value;
    assert_eq!(v["result"]["value"].as_f64(), Some(want));
    assert_eq!(v["result"]["kind"], "hilbert_schmidt");
    assert!(v["meta"]["seed"].is_null());

    let all = ok(&["degree", "--state", s(&path)]);
    assert_eq!(all["result"].as_array().unwrap().len(), 10);
    let h = ok(&["degree", "--kind", "hierarchy", "--order", "2", "--state", s(&path)]);
    assert!((h["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let path = write_state(&dir, "coh.json", &PolarizationSector::single(su2_coherent(HalfSpin::integer(1), Direction::NORTH)));
    let out = poincare(&["degree", "--kind", "hs", "--state", s(&path)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let raw = text.split("\"value\":").nth(1).unwrap().split(['}', ',']).next().unwrap();
    let mantissa = raw.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{raw}");
}

#[test]
fn table_kings_verify() {
    let v = ok(&["kings", "verify", "--table1"]);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r["pass"] == true && r["a_order"].as_f64().unwrap() < 1e-10));
    assert_eq!(v["result"]["all_pass"], true);
}

#[test]
fn q_csv_integrates_to_one() {
    let dir = TempDir::new().unwrap();
    let path = write_state(&dir, "noon.json", &PolarizationSector::single(noon(HalfSpin::integer(2)).unwrap()));
    let csv = dir.path().join("q.csv");
    let v = ok(&["qfunc", "--state", s(&path), "--grid", "64x128", "--out", s(&csv)]);
    assert_eq!(v["result"]["grid"], serde_json::json!([64, 128]));
    let grid = SphereGrid::new(64, 128).unwrap();
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let values: Vec<f64> = reader.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(values.len(), grid.len());
    let sum = grid.integrate(&values) / (4.0 * std::f64::consts::PI);
    assert!((sum - 1.0).abs() < 1e-10, "{sum}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(poincare(&["degree", "--state", "x.json", "--bogus"]).status.code(), Some(2));
    assert_eq!(poincare(&["qfunc", "--state", "x.json", "--grid", "64"]).status.code(), Some(2));
    assert_eq!(poincare(&[]).status.code(), Some(2));
    assert_eq!(poincare(&["kings", "verify"]).status.code(), Some(2));

    let missing = poincare(&["validate", "--state", s(&dir.path().join("none.json"))]);
    assert_eq!(missing.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"layers": [{"twice_spin": 2, "weight": 1.0, "psi": [[1, 0], [0, 0]]}]}"#).unwrap();
    let out = poincare(&["validate", "--state", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "schema");
    assert_eq!(err["error"]["location"], "$.layers[0].psi");

    let coh = write_state(&dir, "coh.json", &PolarizationSector::single(su2_coherent(HalfSpin::integer(1), Direction::NORTH)));
    assert_eq!(poincare(&["kings", "search", "--spin", "1", "--order", "3"]).status.code(), Some(1));
    assert_eq!(poincare(&["degree", "--kind", "hierarchy", "--state", s(&coh)]).status.code(), Some(2));
    assert_eq!(poincare(&["kings", "search", "--spin", "1/3", "--order", "1"]).status.code(), Some(2));
}

#[test]
fn seeds_fix_stochastic_output() {
    let dir = TempDir::new().unwrap();
    let path = write_state(&dir, "coh.json", &PolarizationSector::single(su2_coherent(HalfSpin::integer(1), Direction::new(1.0, 0.5))));
    let run = |seed: &str| poincare(&["tomo", "simulate", "--state", s(&path), "--order", "2", "--shots", "500", "--seed", seed]).stdout;
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
    let v: Value = serde_json::from_slice(&run("7")).unwrap();
    assert_eq!(v["meta"]["seed"], 7);
}

#[test]
fn tomography_pipeline_recovers_multipoles() {
    let dir = TempDir::new().unwrap();
    let st = su2_coherent(HalfSpin::integer(1), Direction::new(1.0, 0.5));
    let path = write_state(&dir, "coh.json", &PolarizationSector::single(st.clone()));
    let csv = dir.path().join("t.csv");
    ok(&["tomo", "simulate", "--state", s(&path), "--order", "2", "--shots", "200000", "--seed", "1", "--out", s(&csv)]);
    let v = ok(&["tomo", "reconstruct", "--tomograms", s(&csv), "--spin", "1", "--order", "2"]);
    let want = multipoles(&st);
    for e in v["result"]["multipoles"]["entries"].as_array().unwrap() {
        let (k, q) = (e["K"].as_u64().unwrap() as usize, e["q"].as_i64().unwrap());
        let got = num_complex::Complex64::new(e["re"].as_f64().unwrap(), e["im"].as_f64().unwrap());
        assert!((got - want.get(k, q)).norm() < 2e-2, "K={k} q={q}");
    }
}

#[test]
fn transforms_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let sec = PolarizationSector::single(noon(HalfSpin::from_twice(3)).unwrap());
    let path = write_state(&dir, "noon.json", &sec);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&["transform", "--state", s(&path), "--axis", "1.1,0.4", "--angle", "0.9", "--out", s(&a)]);
    ok(&["transform", "--state", s(&a), "--axis", "1.1,0.4", "--angle", "-0.9", "--out", s(&b)]);
    let back = load_state(&b).unwrap();
    let d = back.layers()[0].state.rho() - sec.layers()[0].state.rho();
    assert!(d.iter().all(|z| z.norm() < 1e-12));

    let k = dir.path().join("k.json");
    ok(&["kerr", "--state", s(&path), "--time", "6.283185307179586", "--out", s(&k)]);
    let d = load_state(&k).unwrap().layers()[0].state.rho() - sec.layers()[0].state.rho();
    assert!(d.iter().all(|z| z.norm() < 1e-12));

    let e = ok(&["transform", "--state", s(&path), "--euler", "0.1,0.2,0.3"]);
    assert!(e["result"]["state"]["layers"].is_array());
}

#[test]
fn search_output_validates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("king.json");
    let v = ok(&["kings", "search", "--spin", "3/2", "--order", "1", "--restarts", "4", "--seed", "2", "--out", s(&out)]);
    assert_eq!(v["result"]["certified"], true);
    assert_eq!(v["meta"]["seed"], 2);
    let val = ok(&["validate", "--state", s(&out)]);
    assert_eq!(val["result"]["layers"][0]["pure"], true);
    let m = ok(&["majorana", "--state", s(&out)]);
    assert_eq!(m["result"]["layers"][0]["constellation"]["points"].as_array().unwrap().len(), 3);
    let k = ok(&["kings", "verify", "--state", s(&out)]);
    assert_eq!(k["result"]["layers"][0]["order"], 1);
}

#[test]
fn classical_reports() {
    let v = ok(&["classical", "--hv", "0.7071067811865476,0,0.7071067811865476,0"]);
    let ex: Vec<f64> = serde_json::from_value(v["result"]["stokes_intensity_excess"].clone()).unwrap();
    assert!((ex[1] - 0.5).abs() < 1e-15 && ex[2].abs() < 1e-15);
    assert!((v["result"]["degree"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let u = ok(&["classical", "--stokes", "1,0,0,0"]);
    assert!(u["result"]["degree"].as_f64().unwrap().abs() < 1e-15);
    assert!((u["result"]["entropy"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(poincare(&["classical", "--stokes", "0,0,0,0"]).status.code(), Some(1));
}

#[test]
fn multipoles_report() {
    let dir = TempDir::new().unwrap();
    let path = write_state(&dir, "coh.json", &PolarizationSector::single(su2_coherent(HalfSpin::integer(1), Direction::NORTH)));
    let v = ok(&["multipoles", "--state", s(&path)]);
    let a: Vec<f64> = serde_json::from_value(v["result"]["layers"][0]["cumulative_a"].clone()).unwrap();
    assert!((a[0] - 0.5).abs() < 1e-14 && (a[1] - 2.0 / 3.0).abs() < 1e-14);
    assert_eq!(v["result"]["hierarchy"].as_array().unwrap().len(), 2);
}
