//! Black-box tests of the `disperse` binary: exit codes, file contract,
//! determinism, and schema validity of the JSON reports.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn disperse(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disperse"))
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).expect("report exists");
    serde_json::from_str(&text).expect("report parses")
}

/// Minimal validator for the subset of JSON Schema the shipped schema uses:
/// type, properties, required, additionalProperties, items, enum, minItems.
fn validate(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(ty) = schema.get("type") {
        let names: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(n) => {
                if n.is_u64() || n.is_i64() {
                    "integer"
                } else {
                    "number"
                }
            }
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        let ok = names.iter().any(|n| {
            *n == actual || (*n == "number" && actual == "integer")
        });
        if !ok {
            return Err(format!("{path}: expected {names:?}, got {actual}"));
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing required key {key}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        let extra = schema.get("additionalProperties");
        for (key, val) in obj {
            let sub = props.and_then(|p| p.get(key));
            match (sub, extra) {
                (Some(s), _) => validate(s, val, &format!("{path}.{key}"))?,
                (None, Some(Value::Bool(false))) => {
                    return Err(format!("{path}: unexpected key {key}"));
                }
                (None, Some(s)) if s.is_object() => {
                    validate(s, val, &format!("{path}.{key}"))?;
                }
                _ => {}
            }
        }
    }
    if let Some(arr) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (arr.len() as u64) < min {
                return Err(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, val) in arr.iter().enumerate() {
                validate(items, val, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

fn shipped_schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    read_json(&path)
}

#[test]
fn verify_passes_and_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = disperse(&["verify"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report = read_json(&dir.path().join("verify.json"));
    validate(&shipped_schema(), &report, "$").unwrap();

    let assertions = report["assertions"].as_array().unwrap();
    assert!(assertions.len() >= 20, "only {} checks", assertions.len());
    assert!(assertions.iter().all(|a| a["pass"].as_bool().unwrap()));

    let csv = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("check,pass,value,threshold\n"));
    assert_eq!(csv.lines().count(), assertions.len() + 1);
}

#[test]
fn missing_phase_is_a_schema_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"mode": "global"}"#).unwrap();
    let out = disperse(&["scaling", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("schema violation"), "stderr: {stderr}");
    assert!(!dir.path().join("scaling.json").exists());
    assert!(!dir.path().join("scaling.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    std::fs::write(&cfg, r#"{"phse": "wave"}"#).unwrap();
    let out = disperse(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("verify.json").exists());
}

#[test]
fn identical_config_and_seed_give_identical_csv_bytes() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = [
        "scaling", "--phase", "wave", "--mode", "global", "--radii", "4,8,16", "--seed", "7",
    ];
    let out_a = disperse(&args, dir_a.path());
    let out_b = disperse(&args, dir_b.path());
    assert!(out_a.status.success());
    assert!(out_b.status.success());
    let bytes_a = std::fs::read(dir_a.path().join("scaling.csv")).unwrap();
    let bytes_b = std::fs::read(dir_b.path().join("scaling.csv")).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b);

    let text = String::from_utf8(bytes_a).unwrap();
    assert!(text.starts_with("experiment,phase,a,dim,mode,R,norm,slope_running,seed\n"));
    let report = read_json(&dir_a.path().join("scaling.json"));
    validate(&shipped_schema(), &report, "$").unwrap();
}

#[test]
fn budget_violation_exits_with_code_three_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "scaling", "--phase", "schrodinger", "--mode", "global", "--radii", "4,8", "--n", "256",
        "--l", "10",
    ];
    let out = disperse(&args, dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("scaling.json").exists());

    let forced = Command::new(env!("CARGO_BIN_EXE_disperse"))
        .args(args)
        .args(["--force", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    // forced runs complete and report, though their checks may fail
    assert!(matches!(forced.status.code(), Some(0) | Some(1)));
    assert!(dir.path().join("scaling.json").exists());
}

#[test]
fn tolerance_overrides_flow_into_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.json");
    std::fs::write(
        &cfg,
        r#"{"tolerances": {"kernel.slope.schrodinger": -99.0}}"#,
    )
    .unwrap();
    let out = disperse(&["kernel-decay", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = read_json(&dir.path().join("kernel-decay.json"));
    let schro = report["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["name"] == "kernel.slope.schrodinger")
        .unwrap();
    assert_eq!(schro["threshold"].as_f64().unwrap(), -99.0);
    assert!(!schro["pass"].as_bool().unwrap());
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_disperse"))
        .args(["nonstationary"])
        .env("DISPERSE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("nonstationary.json").exists());
    let report = read_json(&dir.path().join("nonstationary.json"));
    validate(&shipped_schema(), &report, "$").unwrap();
}

#[test]
fn nonsense_radius_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = disperse(
        &["scaling", "--phase", "wave", "--radii", "4,9"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("scaling.json").exists());
}
