use std::fs;
use std::path::Path;

use assert_cmd::Command;
use serde_json::Value;

fn msgabor() -> Command {
    Command::cargo_bin("msgabor").unwrap()
}

fn report(out: &[u8]) -> Value {
    serde_json::from_slice(out).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn lattice_psf_passes_with_defaults() {
    let out = msgabor().args(["psf", "lattice"]).assert().success().get_output().stdout.clone();
    let r = report(&out);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["check"], "psf lattice");
    assert!(r["gap"].as_f64().unwrap() < 1e-12);
    assert!(r["tails"].is_array() && r["details"]["truncation"]["radius"].is_number());
}

#[test]
fn malformed_config_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{ "policy": { "radius": 8, "tol": "small" } }"#);
    let a = msgabor().args(["--config", bad.to_str().unwrap(), "psf", "lattice"]).assert().code(2);
    let err = String::from_utf8(a.get_output().stderr.clone()).unwrap();
    assert!(err.contains("policy.tol"), "{err}");
    let unknown = write(dir.path(), "unknown.json", r#"{ "system": { "windowz": [] } }"#);
    msgabor().args(["--config", unknown.to_str().unwrap(), "psf", "lattice"]).assert().code(2);
    let syntax = write(dir.path(), "syntax.json", "{ \"z\": [0, 0 ");
    let a = msgabor().args(["--config", syntax.to_str().unwrap(), "psf", "lattice"]).assert().code(2);
    assert!(String::from_utf8_lossy(&a.get_output().stderr).contains("line"));
}

#[test]
fn config_for_another_check_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{ "check": "duality figa" }"#);
    msgabor().args(["--config", cfg.to_str().unwrap(), "psf", "lattice"]).assert().code(2);
}

#[test]
fn dry_run_reports_truncation_only() {
    let out = msgabor().args(["--dry-run", "--radius", "6", "nseries", "eval"]).assert().success().get_output().stdout.clone();
    let r = report(&out);
    assert_eq!(r["dry_run"], true);
    assert_eq!(r["truncation"]["radius"], 6.0);
    assert_eq!(r["truncation"]["internal_cutoff"], "auto");
    assert!(r["estimated_terms"]["primal_terms"].as_f64().unwrap() > 0.0);
    assert!(r.get("verdict").is_none());
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bounds.json",
        r#"{ "system": { "domain": "lattice", "lattice": { "scale": 0.8 } }, "grid": { "lo": -4, "hi": 4, "step": 0.125 }, "policy": { "radius": 6, "tol": 1 } }"#,
    );
    let run = || {
        let out = msgabor().args(["--config", cfg.to_str().unwrap(), "--seed", "7", "gabor", "bounds"]).assert().success().get_output().stdout.clone();
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("runtime_ms");
        serde_json::to_string(&r).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert!(a.contains("\"seed\":7"));
}

#[test]
fn out_directory_receives_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "n.json", r#"{ "system": { "domain": "lattice" }, "policy": { "radius": 6, "dual_radius": 4 } }"#);
    let out = dir.path().join("out");
    msgabor().args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "nseries", "build"]).assert().success();
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("nseries-build.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(out.join("nseries-build.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "freq1,freq2,re,im");
    assert_eq!(lines.count() as u64, r["details"]["terms"].as_u64().unwrap());
}

#[test]
fn painless_wexler_raz_and_janssen() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", r#"{ "painless": {}, "policy": { "radius": 8, "dual_radius": 15.9, "tol": 1e-8 } }"#);
    let out = msgabor().args(["--config", cfg.to_str().unwrap(), "duality", "wexler-raz"]).assert().success().get_output().stdout.clone();
    let r = report(&out);
    assert_eq!(r["verdict"], "pass");
    assert!(r["details"]["sup_residual"].as_f64().unwrap() < 1e-8);
    let out = msgabor().args(["--config", cfg.to_str().unwrap(), "duality", "janssen"]).assert().success().get_output().stdout.clone();
    assert!(report(&out)["gap"].as_f64().unwrap() < 1e-6);
    let out = msgabor().args(["--config", cfg.to_str().unwrap(), "duality", "density"]).assert().success().get_output().stdout.clone();
    let r = report(&out);
    assert_eq!(r["details"]["density"], 4.0);
    assert_eq!(r["details"]["chain_consistent"], true);
}

#[test]
fn signal_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,re,im\n");
    for j in 0..=256 {
        let t = -4.0 + j as f64 / 32.0;
        csv += &format!("{t},{},0\n", 2f64.powf(0.25) * (-std::f64::consts::PI * t * t).exp());
    }
    let sig = write(dir.path(), "g0.csv", &csv);
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{ "system": { "domain": "lattice" }, "grid": { "lo": -4, "hi": 4, "step": 0.03125 }, "policy": { "radius": 6, "tol": 1 } }"#,
    );
    let out = dir.path().join("out");
    msgabor()
        .args(["--config", cfg.to_str().unwrap(), "--signal", sig.to_str().unwrap(), "--out", out.to_str().unwrap(), "gabor", "apply"])
        .assert()
        .success();
    let table = fs::read_to_string(out.join("gabor-apply.csv")).unwrap();
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("gabor-apply.json")).unwrap()).unwrap();
    assert_eq!(r["details"]["grid"]["len"], 256);
    assert_eq!(table.lines().count(), 257);
    let gapped = write(dir.path(), "gap.csv", "t,re,im\n0,1,0\n0.5,1,0\n2,1,0\n");
    msgabor().args(["--config", cfg.to_str().unwrap(), "--signal", gapped.to_str().unwrap(), "gabor", "apply"]).assert().code(2);
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // critical Gaussian is not self-dual: residuals off the origin
    let cfg = write(dir.path(), "wr.json", r#"{ "system": { "domain": "lattice" }, "policy": { "radius": 6, "dual_radius": 3 } }"#);
    let out = msgabor().args(["--config", cfg.to_str().unwrap(), "duality", "wexler-raz"]).assert().code(1).get_output().stdout.clone();
    assert_eq!(report(&out)["verdict"], "fail");
}

#[test]
fn scheme_and_modelset_commands() {
    let dir = tempfile::tempdir().unwrap();
    let scheme = write(dir.path(), "s.json", r#"{ "d": 1, "basis": [[1, 0, 1.4142135623730951], [0, 1, 1.7320508075688772], [2.23606797749979, 2.6457513110645907, 1]] }"#);
    let out = msgabor().args(["--scheme", scheme.to_str().unwrap(), "--radius", "6", "scheme", "check"]).assert().success().get_output().stdout.clone();
    assert_eq!(report(&out)["verdict"], "pass");
    let out = msgabor().args(["--radius", "100", "modelset", "density"]).assert().success().get_output().stdout.clone();
    assert!(report(&out)["details"]["relative_gap"].as_f64().unwrap() < 0.02);
    let out = msgabor().args(["--radius", "8", "modelset", "genericity"]).assert().success().get_output().stdout.clone();
    assert_eq!(report(&out)["details"]["generic"], true);
    let out_dir = dir.path().join("o");
    msgabor().args(["--radius", "5", "--out", out_dir.to_str().unwrap(), "modelset", "enumerate"]).assert().success();
    assert!(fs::read_to_string(out_dir.join("modelset-enumerate.csv")).unwrap().starts_with("lambda1,lambda2,internal,weight"));
}

#[test]
fn bump_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    msgabor().args(["--out", out.to_str().unwrap(), "bump", "eval"]).assert().success();
    msgabor().args(["--out", out.to_str().unwrap(), "bump", "table"]).assert().success();
    let eval = fs::read_to_string(out.join("bump-eval.csv")).unwrap();
    let mid: Vec<&str> = eval.lines().nth(201).unwrap().split(',').collect();
    assert_eq!(mid[0], "0");
    assert!((mid[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!(fs::read_to_string(out.join("bump-table.csv")).unwrap().starts_with("x,psi"));
}

#[test]
fn acceptance_subset_runs() {
    let a = msgabor().args(["suite", "acceptance", "AC-1", "AC-8"]).assert().success();
    let err = String::from_utf8_lossy(&a.get_output().stderr).to_string();
    assert!(err.contains("AC-1") && err.contains("AC-8"));
    let r = report(&a.get_output().stdout);
    assert_eq!(r["details"]["rows"].as_array().unwrap().len(), 2);
}
