//! End-to-end checks of the `bjpa` binary: exit codes, artifact layout and
//! report schemas.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const DESIGN: &str = r#"{ "n_quartons": 20, "m_slaves": 8, "alpha_c": 0.1, "e_js": 1.3e-22, "c_g": 5e-16,
    "c_js": 5e-14, "c_jm": 5e-15, "z0": 50.0, "kappa": 62831853.07179586 }"#;

fn config(blocks: &str) -> String {
    config_with_design(DESIGN, blocks)
}

fn config_with_design(design: &str, blocks: &str) -> String {
    let mut s = format!(
        r#"{{ "design": {design}, "design_frequency_ghz": 6.0, "scale": {{ "omega_p": 37699111843.07752 }}"#
    );
    if !blocks.is_empty() {
        s.push_str(", ");
        s.push_str(blocks);
    }
    s.push('}');
    s
}

const ALL_BLOCKS: &str = r#"
  "photon_number": { "delta": { "start": -2.0, "stop": 2.0, "count": 21 },
                     "zeta": { "values": [0.5, 1.5] }, "zeta_units": "threshold" },
  "gain": { "delta": { "start": -2.0, "stop": 1.0, "count": 7 }, "zeta": { "values": [0.8] },
            "zeta_units": "threshold", "big_delta": { "start": -1.0, "stop": 1.0, "count": 5 } },
  "p1db": { "pump_power_dbm": { "values": [-112.0, -110.0] } },
  "tune": { "band_ghz": [4.0, 6.0], "n_points": 3 },
  "compare": { "b": { "n_quartons": 40, "m_slaves": 4, "alpha_c": 0.3, "e_js": 1.3e-22, "c_g": 5e-16,
                      "c_js": 5e-14, "c_jm": 5e-15, "z0": 50.0, "kappa": 62831853.07179586 } },
  "optimize": { "budget": 30, "bounds": [
      { "param": "m_slaves", "bounds": { "kind": "integer", "lo": 4, "hi": 8 } },
      { "param": "alpha_c", "bounds": { "kind": "continuous", "lo": 0.0, "hi": 0.4 } } ] },
  "sweep": { "axes": [ { "param": "m_slaves", "values": [4, 8] },
                       { "param": "delta", "start": -1.0, "stop": 0.0, "count": 3 } ],
             "outputs": ["omega_eff_ghz", "gain_db", "p1db_dbm"], "zeta": -0.15 }
"#;

const COMMANDS: [&str; 8] = ["model", "photon-number", "gain", "p1db", "tune", "compare", "optimize", "sweep"];

struct Run {
    output: Output,
    out: PathBuf,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn artifact(&self, ext: &str) -> PathBuf {
        std::fs::read_dir(&self.out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().is_some_and(|e| e == ext) && !p.ends_with("manifest.json"))
            .unwrap_or_else(|| panic!("no .{ext} artifact in {}", self.out.display()))
    }

    fn json(&self) -> Value {
        serde_json::from_slice(&std::fs::read(self.artifact("json")).unwrap()).unwrap()
    }

    fn manifest(&self) -> Value {
        serde_json::from_slice(&std::fs::read(self.out.join("manifest.json")).unwrap()).unwrap()
    }

    fn csv(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut r = csv::Reader::from_path(self.artifact("csv")).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
        (header, rows)
    }
}

fn bjpa(dir: &Path, cmd: &str, cfg: &str, extra: &[&str]) -> Run {
    let path = dir.join(format!("{cmd}.json"));
    std::fs::write(&path, cfg).unwrap();
    bjpa_path(dir, cmd, &path, extra)
}

fn bjpa_path(dir: &Path, cmd: &str, path: &Path, extra: &[&str]) -> Run {
    let out = dir.join(format!("out-{cmd}"));
    let output = Command::new(env!("CARGO_BIN_EXE_bjpa"))
        .args([cmd, "--config"])
        .arg(path)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .args(extra)
        .output()
        .unwrap();
    Run { output, out }
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.schema.json"));
    let s: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let errors: Vec<String> = schema(name).iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

#[test]
fn every_report_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(ALL_BLOCKS);
    for cmd in COMMANDS {
        let run = bjpa(dir.path(), cmd, &cfg, &[]);
        assert_eq!(run.code(), 0, "{cmd}: {}", run.stderr());
        assert_valid(cmd, &run.json());
        assert_valid("manifest", &run.manifest());
    }
}

#[test]
fn manifest_hashes_config_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(ALL_BLOCKS);
    let run = bjpa(dir.path(), "model", &cfg, &["--formats", "csv,json,svg"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let m = run.manifest();
    let hex = |b: &[u8]| Sha256::digest(b).iter().map(|x| format!("{x:02x}")).collect::<String>();
    assert_eq!(m["config_sha256"], hex(cfg.as_bytes()));
    assert_eq!(m["command"], "model");
    assert_eq!(m["workers"], 2);
    let artifacts = m["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 3);
    for a in artifacts {
        let bytes = std::fs::read(run.out.join(a["file"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"], hex(&bytes));
    }
}

#[test]
fn formats_flag_restricts_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = bjpa(dir.path(), "model", &config(""), &["--formats", "json"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let mut names: Vec<String> = std::fs::read_dir(&run.out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 2, "{names:?}");
    assert_eq!(names[0], "manifest.json");
    assert!(names[1].starts_with("model-") && names[1].ends_with(".json"));
}

#[test]
fn missing_kappa_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let design = DESIGN.replace(r#", "kappa": 62831853.07179586"#, "");
    let run = bjpa(dir.path(), "model", &config_with_design(&design, ""), &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("kappa"), "{}", run.stderr());
    assert!(!run.out.exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = bjpa(dir.path(), "model", &config(r#""colour": "blue""#), &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("colour"), "{}", run.stderr());
}

#[test]
fn command_without_its_block_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = bjpa(dir.path(), "tune", &config(""), &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("tune"), "{}", run.stderr());
}

#[test]
fn invalid_design_value_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let design = DESIGN.replace(r#""alpha_c": 0.1"#, r#""alpha_c": -0.5"#);
    let run = bjpa(dir.path(), "model", &config_with_design(&design, ""), &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("alpha_c"), "{}", run.stderr());
}

#[test]
fn zero_workers_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = bjpa(dir.path(), "model", &config(""), &["--workers", "0"]);
    assert_eq!(run.code(), 2);
}

#[test]
fn band_above_the_design_frequency_is_a_coverage_gap() {
    let dir = tempfile::tempdir().unwrap();
    let run = bjpa(dir.path(), "tune", &config(r#""tune": { "band_ghz": [4.0, 9.0] }"#), &[]);
    assert_eq!(run.code(), 1, "{}", run.stderr());
    assert!(run.stderr().contains("band edge"), "{}", run.stderr());
}

#[test]
fn unreachable_gain_floor_makes_optimize_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let block = r#""optimize": { "min_gain_db": 60.0, "budget": 30, "bounds": [
        { "param": "m_slaves", "bounds": { "kind": "integer", "lo": 4, "hi": 6 } } ] }"#;
    let run = bjpa(dir.path(), "optimize", &config(block), &[]);
    assert_eq!(run.code(), 1, "{}", run.stderr());
    assert!(run.stderr().contains("no feasible design"), "{}", run.stderr());
}

#[test]
fn identical_designs_compare_with_zero_difference() {
    let dir = tempfile::tempdir().unwrap();
    let block = format!(r#""compare": {{ "b": {DESIGN} }}"#);
    let run = bjpa(dir.path(), "compare", &config(&block), &["--formats", "csv"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = run.csv();
    let p = column(&header, "p1db_dbm");
    let diff = rows.iter().find(|r| r[0] == "difference").unwrap();
    assert_eq!(diff[p], "0.0000000000000000e0");
    let a = rows.iter().find(|r| r[0] == "a").unwrap();
    let b = rows.iter().find(|r| r[0] == "b").unwrap();
    assert_eq!(a[p], b[p]);
}

#[test]
fn linear_master_junctions_give_exactly_zero_kerr() {
    let dir = tempfile::tempdir().unwrap();
    let design = DESIGN.replace(r#""alpha_c": 0.1"#, r#""alpha_c": 1.0"#);
    let run = bjpa(dir.path(), "model", &config_with_design(&design, ""), &["--formats", "csv"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = run.csv();
    assert_eq!(rows[0][column(&header, "kerr_hz")], "0.0000000000000000e0");
}

#[test]
fn reference_design_has_negative_kerr() {
    let dir = tempfile::tempdir().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json");
    let run = bjpa_path(dir.path(), "model", &path, &["--formats", "csv"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = run.csv();
    let k: f64 = rows[0][column(&header, "kerr_hz")].parse().unwrap();
    assert!(k < 0.0 && k.is_finite());
}

#[test]
fn undriven_photon_number_is_a_lorentzian_peaking_at_four() {
    let dir = tempfile::tempdir().unwrap();
    let block = r#""photon_number": { "delta": { "start": -2.0, "stop": 2.0, "count": 41 },
                                      "zeta": { "values": [0.0] } }"#;
    let run = bjpa(dir.path(), "photon-number", &config(block), &["--formats", "csv"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = run.csv();
    assert_eq!(rows.len(), 41, "one root per detuning");
    let (d, n) = (column(&header, "delta"), column(&header, "n"));
    for r in &rows {
        let delta: f64 = r[d].parse().unwrap();
        let got: f64 = r[n].parse().unwrap();
        assert!((got - 1.0 / (0.25 + delta * delta)).abs() < 1e-9, "δ = {delta}: n = {got}");
    }
    let peak = rows
        .iter()
        .max_by(|a, b| a[n].parse::<f64>().unwrap().total_cmp(&b[n].parse().unwrap()))
        .unwrap();
    assert_eq!(peak[d], "0.0000000000000000e0");
}

#[test]
fn photon_number_rows_count_every_root() {
    let dir = tempfile::tempdir().unwrap();
    let block = r#""photon_number": { "delta": { "start": -2.0, "stop": 0.0, "count": 21 },
                                      "zeta": { "values": [1.5] }, "zeta_units": "threshold" }"#;
    let run = bjpa(dir.path(), "photon-number", &config(block), &["--formats", "csv,json"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = run.csv();
    let b = column(&header, "bistable");
    assert!(rows.iter().any(|r| r[b] == "true"), "threshold × 1.5 must open a three-root window");
    let mut by_delta = std::collections::BTreeMap::<String, usize>::new();
    for r in &rows {
        *by_delta.entry(r[column(&header, "delta")].clone()).or_default() += 1;
    }
    assert_eq!(by_delta.len(), 21);
    for (delta, count) in by_delta {
        assert!(count == 1 || count == 3, "δ = {delta}: {count} roots");
    }
}

#[test]
fn undriven_gain_map_is_flat_zero() {
    let dir = tempfile::tempdir().unwrap();
    let block = r#""gain": { "delta": { "start": -1.0, "stop": 1.0, "count": 5 }, "zeta": { "values": [0.0] },
                             "big_delta": { "start": -0.5, "stop": 0.5, "count": 3 } }"#;
    let run = bjpa(dir.path(), "gain", &config(block), &["--formats", "csv"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = run.csv();
    assert_eq!(rows.len(), 15);
    let g = column(&header, "g_signal_db");
    for r in &rows {
        let v: f64 = r[g].parse().unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }
}
