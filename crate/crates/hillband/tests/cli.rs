//! End-to-end tests of the `hillband` binary: exit codes, artifact
//! presence, and byte-for-byte determinism of the generated reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hillband")
}

/// Fresh scratch directory under the target dir (kept out of the source
/// tree, unique per test).
fn scratch(tag: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("cli_{tag}"));
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn run(sub: &str, config: &Path, out: &Path) -> std::process::Output {
    Command::new(bin())
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

const MATHIEU_SMALL: &str = r#"{
    "potential": {"type": "fourier", "cos": [0.0, 2.0]},
    "n_gaps": 6
}"#;

#[test]
fn bands_succeeds_and_writes_artifacts() {
    let dir = scratch("bands");
    let config = write_config(&dir, MATHIEU_SMALL);
    let out = dir.join("out");
    let res = run("bands", &config, &out);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    for name in ["bands.csv", "bands.json", "comb.svg", "checks.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let csv = fs::read_to_string(out.join("bands.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,energy_minus,energy_plus,e_minus,e_plus,e_max,h,mass,degenerate"
    );
    assert_eq!(lines.count(), 6);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = scratch("determinism");
    let config = write_config(&dir, MATHIEU_SMALL);
    let (a, b) = (dir.join("a"), dir.join("b"));
    assert_eq!(run("bands", &config, &a).status.code(), Some(0));
    assert_eq!(run("bands", &config, &b).status.code(), Some(0));
    for name in ["bands.csv", "bands.json", "comb.svg", "checks.json"] {
        let fa = fs::read(a.join(name)).unwrap();
        let fb = fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between runs");
    }
}

#[test]
fn discriminant_csv_has_header_and_samples() {
    let dir = scratch("discriminant");
    let config = write_config(
        &dir,
        r#"{"potential": {"type": "fourier", "cos": [0.0, 1.0]}, "n_gaps": 3}"#,
    );
    let out = dir.join("out");
    let res = run("discriminant", &config, &out);
    assert_eq!(res.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("discriminant.csv")).unwrap();
    assert!(csv.starts_with("z,delta,delta_prime\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn malformed_json_exits_2() {
    let dir = scratch("badjson");
    let config = write_config(&dir, "{not json");
    let res = run("bands", &config, &dir.join("out"));
    assert_eq!(res.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
}

#[test]
fn invalid_field_values_exit_2() {
    let dir = scratch("badfield");
    let config = write_config(
        &dir,
        r#"{"potential": {"type": "fourier", "cos": [0.0, 1.0]}, "n_gaps": 0}"#,
    );
    let res = run("bands", &config, &dir.join("out"));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_2() {
    let dir = scratch("missing");
    let res = run("bands", &dir.join("nope.json"), &dir.join("out"));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn failed_check_exits_1_with_manifest() {
    let dir = scratch("failing");
    // impossible tolerance: the Bloch identity residual is never exactly 0
    let config = write_config(
        &dir,
        r#"{
            "potential": {"type": "fourier", "cos": [0.0, 0.5]},
            "n_gaps": 4,
            "m": 1,
            "tolerances": {"identity": 0.0}
        }"#,
    );
    let out = dir.join("out");
    let res = run("verify", &config, &out);
    assert_eq!(res.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let manifest = fs::read_to_string(out.join("failure_manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert!(!v["failed"].as_array().unwrap().is_empty());
    assert!(v["config_hash"].as_str().is_some());
}

#[test]
fn unsupported_pipeline_exits_3() {
    let dir = scratch("capability");
    // the asymptotics suite needs a smooth potential; a distributional one
    // is a computation-capability failure, not a config syntax error
    let config = write_config(
        &dir,
        r#"{"potential": {"type": "distribution", "p_cos": [0.0, 0.1]}, "n_gaps": 4}"#,
    );
    let res = run("verify", &config, &dir.join("out"));
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn dump_kappa_prints_recursion() {
    let dir = scratch("kappa");
    let config = write_config(
        &dir,
        r#"{"potential": {"type": "fourier", "cos": [0.0, 1.0]}, "m": 1}"#,
    );
    let out = dir.join("out");
    let res = run("dump-kappa", &config, &out);
    assert_eq!(res.status.code(), Some(0));
    let text = fs::read_to_string(out.join("kappa.txt")).unwrap();
    assert!(text.starts_with("k1 = +1*u0"));
    assert!(text.contains("k3 = +1*u2 -1*u0^2"));
}
