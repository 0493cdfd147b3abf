use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    dir: Option<PathBuf>,
    stderr: String,
}

fn loewner(tmp: &TempDir, cmd: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = tmp.path().join(format!("{cmd}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out: Output = Command::new(env!("CARGO_BIN_EXE_loewner"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .args(extra)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).trim().to_string();
    Run {
        code: out.status.code().unwrap_or(-1),
        dir: (!stdout.is_empty()).then(|| PathBuf::from(stdout)),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn check_max(dir: &Path, name: &str) -> f64 {
    json(dir, "run.json")["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))["max"]
        .as_f64()
        .unwrap()
}

const SLIT: &str = r#"{
  "driving": {"branches": [{"xi": {"kind": "const", "value": 0.0}}], "hcap": {"kind": "linear", "rate": 2.0}, "t_end": 1.0},
  "samples": 10
}"#;

#[test]
fn trace_slit_tip_reaches_two_i() {
    let tmp = TempDir::new().unwrap();
    let r = loewner(&tmp, "trace-slit", SLIT, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let dir = r.dir.unwrap();
    let mut rdr = csv::Reader::from_path(dir.join("hull.csv")).unwrap();
    let last: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .last()
        .unwrap();
    assert_eq!(last[0], 1.0);
    assert!(
        last[1].abs() < 1e-4 && (last[2] - 2.0).abs() < 1e-4,
        "{last:?}"
    );
}

#[test]
fn invert_series_reports_h2_exactly() {
    let tmp = TempDir::new().unwrap();
    let r = loewner(&tmp, "invert-series", r#"{"coeffs": [1, 0, 2, 0, 0]}"#, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json(&r.dir.unwrap(), "inverse.json");
    assert_eq!(doc["arithmetic"], "rational");
    // H^2 = A^2 + (A^0)^2, H^4 = A^4 + 4 A^0 A^2 + 2 (A^1)^2 + 2 (A^0)^3
    assert_eq!(doc["h"][2], "3");
    assert_eq!(doc["h"][4], "10");
}

#[test]
fn check_gt_on_cold_plasma_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"fixture": {"N": 2, "kind": "cold_plasma"}, "grid": {"lo": [1.0, -0.5], "width": 1.0, "n": 64}}"#;
    let r = loewner(&tmp, "check-gt", cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(check_max(&r.dir.unwrap(), "gt") < 1e-3);
}

fn kinetic(n: usize, initial: &str) -> String {
    format!(
        r#"{{"x": {{"n": {n}}}, "w": {{"n": {}}}, "initial": {initial}, "s_end": 0.5}}"#,
        n + 1
    )
}

const COLD: &str = r#"{"kind": "cold_plasma", "eta": {"kind": "trig", "mean": 1.0, "cos": [0.1]}, "v": {"kind": "const", "value": 0.0}, "width": 0.5}"#;

#[test]
fn kinetic_pipeline_passes_on_fine_grid() {
    let tmp = TempDir::new().unwrap();
    let r = loewner(&tmp, "evolve-kinetic", &kinetic(256, COLD), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let dir = r.dir.unwrap();
    assert!(check_max(&dir, "benney") < 1e-3);
    assert!(check_max(&dir, "drift") < 1e-4);
    for f in ["moments.csv", "moments.json", "verdict.json", "benney.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn coarse_kinetic_grid_breaches_with_report() {
    let tmp = TempDir::new().unwrap();
    let r = loewner(&tmp, "evolve-kinetic", &kinetic(16, COLD), &[]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let dir = r.dir.unwrap();
    assert!(r.stderr.contains("benney.json"), "{}", r.stderr);
    assert!(json(&dir, "benney.json")["max"].as_f64().unwrap() > 1e-3);
    assert_eq!(json(&dir, "run.json")["pass"], false);
}

#[test]
fn zero_capacity_map_has_no_residual() {
    let tmp = TempDir::new().unwrap();
    let initial = r#"{"kind": "map",
      "driving": {"branches": [{"xi": {"kind": "const", "value": 0.0}}], "hcap": {"kind": "const", "value": 0.0}, "t_end": 1.0},
      "t0": {"kind": "bump", "base": 0.2, "height": 0.5, "center": 3.0, "width": 0.5}}"#;
    let r = loewner(&tmp, "evolve-kinetic", &kinetic(32, initial), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let dir = r.dir.unwrap();
    for name in ["benney", "drift", "mass"] {
        assert!(check_max(&dir, name) < 1e-12, "{name}");
    }
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let tmp = TempDir::new().unwrap();
    let r = loewner(
        &tmp,
        "invert-series",
        "{\n  \"coeffs\": [1, 2],\n  \"extra\": 1\n}",
        &[],
    );
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.contains("line 3") && r.stderr.contains("extra"),
        "{}",
        r.stderr
    );
    assert!(r.dir.is_none());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_driving_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{
  "driving": {"branches": [], "t_end": 1.0}
}"#;
    let r = loewner(&tmp, "trace-slit", cfg, &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.starts_with("error:"), "{}", r.stderr);
}

#[test]
fn tolerance_override_turns_pass_into_breach() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"b": [0.1, -0.05, 0.02], "n_max": 3, "xi": [0.3, -0.2]}"#;
    let ok = loewner(&tmp, "faber", cfg, &[]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    let strict = loewner(&tmp, "faber", cfg, &["--tol", "faber_dual=1e-300"]);
    let max = check_max(strict.dir.as_ref().unwrap(), "faber_dual");
    assert_eq!(strict.code, if max > 1e-300 { 2 } else { 0 });
    let run = json(strict.dir.as_ref().unwrap(), "run.json");
    assert_eq!(run["tolerances"]["faber_dual"], 1e-300);
}

#[test]
fn unknown_tolerance_name_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let r = loewner(
        &tmp,
        "faber",
        r#"{"b": [0.1], "n_max": 1}"#,
        &["--tol", "benney=1"],
    );
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.contains("benney") && r.stderr.contains("faber_dual"),
        "{}",
        r.stderr
    );
}

#[test]
fn bad_thread_count_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"coeffs": [1]}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_loewner"))
        .args(["invert-series", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .env("BL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero_and_bad_usage_exits_one() {
    let help = Command::new(env!("CARGO_BIN_EXE_loewner"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("--emit-gnuplot"));
    let bad = Command::new(env!("CARGO_BIN_EXE_loewner"))
        .arg("no-such-command")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn repeated_runs_get_distinct_directories() {
    let tmp = TempDir::new().unwrap();
    let a = loewner(&tmp, "invert-series", r#"{"coeffs": [1, 0]}"#, &[]);
    let b = loewner(&tmp, "invert-series", r#"{"coeffs": [1, 0]}"#, &[]);
    let (a, b) = (a.dir.unwrap(), b.dir.unwrap());
    assert_ne!(a, b);
    assert!(a
        .file_name()
        .unwrap()
        .to_string_lossy()
        .starts_with("invert-series-"));
    assert_eq!(
        std::fs::read(a.join("inverse.json")).unwrap(),
        std::fs::read(b.join("inverse.json")).unwrap()
    );
}

#[test]
fn gnuplot_scripts_only_on_request() {
    let tmp = TempDir::new().unwrap();
    let plain = loewner(&tmp, "trace-slit", SLIT, &[]).dir.unwrap();
    assert!(!plain.join("hull.gp").exists());
    let plotted = loewner(&tmp, "trace-slit", SLIT, &["--emit-gnuplot"])
        .dir
        .unwrap();
    assert!(plotted.join("hull.gp").exists());
}

#[test]
fn remaining_commands_run_clean() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (
            "evolve-series",
            r#"{"driving": {"branches": [{"xi": {"kind": "const", "value": 0.3}}], "t_end": 1.0}, "order": 6, "samples": 4, "check_flow": true}"#,
        ),
        (
            "split-time",
            r#"{"xi": 0.0, "t0": {"kind": "bump", "base": 0.2, "height": 0.5, "center": 3.0, "width": 0.5}, "x": {"lo": 0, "hi": 6.28, "n": 8}, "s": {"lo": 0, "hi": 1, "n": 5}}"#,
        ),
        (
            "evolve-chain",
            r#"{"grid": {"n": 128}, "eta": {"kind": "trig", "mean": 1.0, "cos": [0.1]}, "v": {"kind": "const", "value": 0.0}, "s_end": 0.5}"#,
        ),
        (
            "bracket-check",
            r#"{"grid": {"n": 64}, "moments": [{"kind": "trig", "mean": 1.0, "cos": [0.2]}, {"kind": "trig", "mean": 0.1, "sin": [0.3]}, {"kind": "const", "value": 0.5}, {"kind": "trig", "mean": 0.2, "sin": [0.1]}, {"kind": "trig", "mean": 0.3, "cos": [0.1]}], "commutation": [[2, 3]]}"#,
        ),
        (
            "check-mdkp",
            r#"{"data": {"kind": "cold_plasma_sheet", "grid": {"n": 64}, "eta": {"kind": "trig", "mean": 0.1, "cos": [0.02]}, "v": {"kind": "trig", "mean": 2.0, "sin": [0.1]}, "h": 0.005, "dt_max": 0.001}}"#,
        ),
        (
            "vertex-check",
            r#"{"mu": [0, 1], "u": [0, 1], "x0": [0, 1], "bracket": [0, 4], "x": [1, 3], "s": [0.5, 0.75], "y": [0.1, 0.35], "h": 0.02, "spot": [[2, 1, 0]]}"#,
        ),
    ];
    for (cmd, cfg) in cases {
        let r = loewner(&tmp, cmd, cfg, &[]);
        assert_eq!(r.code, 0, "{cmd}: {}", r.stderr);
        assert_eq!(
            json(r.dir.as_ref().unwrap(), "run.json")["pass"],
            true,
            "{cmd}"
        );
    }
}

#[test]
fn n1_spot_values_are_written() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"mu": [0, 1], "u": [0, 1], "x0": [0, 1], "bracket": [0, 4], "x": [1, 3], "s": [0.5, 0.75], "y": [0.1, 0.35], "h": 0.0625, "spot": [[2, 1, 0]]}"#;
    // coarse h: residuals may breach, the spot file is written either way
    let r = loewner(&tmp, "check-dkp", cfg, &[]);
    assert!(r.code == 0 || r.code == 2, "{}", r.stderr);
    let mut rdr = csv::Reader::from_path(r.dir.unwrap().join("spot.csv")).unwrap();
    let row: Vec<f64> = rdr
        .records()
        .next()
        .unwrap()
        .unwrap()
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(&row[..5], &[2.0, 1.0, 0.0, 1.0, 1.0]);
    assert!((row[5] - 0.5).abs() < 1e-10);
}
