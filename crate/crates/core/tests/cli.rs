//! End-to-end runs of the `psurf` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn psurf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psurf"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("run psurf")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL_SOLITON: &str = r#"
lambdas = [LAMBDAS]

[potential]
kind = "normalized"
x = { function = "builtin:soliton_x", domain = [0.0, 1.0] }
y = { function = "builtin:soliton_y", domain = [0.0, 1.0] }

[grid]
nx = 65
ny = 65
x_range = [0.0, 1.0]
y_range = [0.0, 1.0]
"#;

#[test]
fn soliton_build_passes_and_writes_meshes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("soliton.toml");
    let o = psurf(&["build", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(tmp.path());
    assert!(r["curvature_max_dev"].as_f64().unwrap() < 5e-3);
    assert_eq!(r["verify.oracle"], "pass");
    assert_eq!(r["all_degenerate"], false);
    let obj = std::fs::read_to_string(tmp.path().join("surface_lambda_1.obj")).unwrap();
    assert!(!obj.contains('\r'));
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 65 * 65);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 64 * 64);
    let csv = std::fs::read_to_string(tmp.path().join("surface_lambda_2.csv")).unwrap();
    assert!(csv.starts_with("x,y,fx,fy,fz,phi,degenerate\n"));
    let text = std::fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(text.lines().any(|l| l == "verdict: pass"));
}

#[test]
fn flat_config_reports_all_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let o = psurf(&["build", configs().join("flat.toml").to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(tmp.path())["all_degenerate"], true);
}

#[test]
fn malformed_config_names_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_SOLITON.replace("LAMBDAS", "1.0").replace("nx = 65", "nx = 65\ncolour = \"red\"");
    let cfg = write_config(tmp.path(), &text);
    let o = psurf(&["build", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains("line 11"), "{err}");

    let cfg = write_config(tmp.path(), &SMALL_SOLITON.replace("LAMBDAS", "1.0").replace("soliton_y", "solitn_y"));
    let o = psurf(&["build", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("potential.y.function"));
}

#[test]
fn empty_lambda_list_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL_SOLITON.replace("LAMBDAS", ""));
    let o = psurf(&["sweep", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[lambdas]"));
}

#[test]
fn factorization_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_SOLITON.replace("LAMBDAS", "1.0") + "\n[tolerances]\nbirkhoff_tail = 1e-300\n";
    let cfg = write_config(tmp.path(), &text);
    let o = psurf(&["build", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at node"));
}

#[test]
fn sweep_speeds_scale_with_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL_SOLITON.replace("LAMBDAS", "0.5, 1.0, 2.0"));
    let o = psurf(&["sweep", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rows = csv::Reader::from_path(tmp.path().join("out/family.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let dev = |k: usize| r[k].parse::<f64>().unwrap();
        assert!(dev(1) < 5e-3 && dev(2) < 1e-3 && dev(3) < 1e-3, "{r:?}");
        assert_eq!(&r[4], "true");
    }
}

#[test]
fn single_lambda_sweep_matches_build_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL_SOLITON.replace("LAMBDAS", "1.0"));
    let c = cfg.to_str().unwrap();
    let (a, b, s) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("s"));
    for (cmd, dir) in [("build", &a), ("build", &b), ("sweep", &s)] {
        let o = psurf(&[cmd, c, "--threads", "2"], dir);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in ["surface_lambda_1.csv", "surface_lambda_1.obj"] {
        assert_eq!(read(&a, f), read(&b, f));
        assert_eq!(read(&a, f), read(&s, f));
    }
}

#[test]
fn verify_writes_no_meshes() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("verify = [\"geometry\", \"oracle\"]\n{}", SMALL_SOLITON.replace("LAMBDAS", "1.0"));
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = psurf(&["verify", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("surface_lambda_1.obj").exists());
    assert_eq!(report(&out)["verify.geometry"], "pass");
}

#[test]
fn mismatched_symmetry_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("soliton_amsler_gamma.toml");
    let o = psurf(&["verify", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let r = report(tmp.path());
    assert_eq!(r["symmetry.certified"], false);
    assert_eq!(r["verdict"], "fail");
}

#[test]
fn amsler_symmetry_certifies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("amsler3.toml");
    let o = psurf(&["verify", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(tmp.path());
    for k in ["equivariance_x", "equivariance_y", "monodromy_spread", "surface_residual"] {
        assert_eq!(r[format!("symmetry.{k}_pass")], true, "{k}");
    }
    assert!(r["symmetry.rotation_angle_measured_rad"].as_f64().is_some());
}

#[test]
fn gauged_config_passes_geometry_and_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let o = psurf(&["build", configs().join("gauged.toml").to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(tmp.path())["kind"], "generalized");
}
