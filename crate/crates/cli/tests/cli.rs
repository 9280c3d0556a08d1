use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn normsol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normsol")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks the subset of JSON Schema used by the shipped schemas.
fn validate(value: &Value, schema: &Value, at: &str) -> Result<(), String> {
    let fail = |what: &str| Err(format!("{at}: {what}, got {value}"));
    if let Some(c) = schema.get("const") {
        if value != c {
            return fail(&format!("expected {c}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return fail("not in enum");
        }
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        });
        if !ok {
            return fail(&format!("expected type {t}"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if x < min {
            return fail("below minimum");
        }
    }
    if let Some(obj) = value.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                return fail(&format!("missing {key}"));
            }
        }
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(v, sub, &format!("{at}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return fail(&format!("unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let Some(items) = value.as_array() {
        let len = items.len() as u64;
        if schema.get("minItems").and_then(Value::as_u64).is_some_and(|m| len < m)
            || schema.get("maxItems").and_then(Value::as_u64).is_some_and(|m| len > m)
        {
            return fail("wrong length");
        }
        if let Some(sub) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(item, sub, &format!("{at}[{i}]"))?;
            }
        }
    }
    Ok(())
}

fn assert_schema(value: &Value, name: &str) {
    validate(value, &schema(name), "$").unwrap();
    assert_eq!(value["schema_version"], "1.0.0");
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn validator_rejects_bad_documents() {
    let s = schema("ground");
    let mut doc = json(&normsol(&["ground", "-N", "1", "-p", "3", "--json"]));
    assert!(validate(&doc, &s, "$").is_ok());
    doc["gamma"] = Value::String("four".into());
    assert!(validate(&doc, &s, "$").is_err());
    doc.as_object_mut().unwrap().remove("gamma");
    assert!(validate(&doc, &s, "$").is_err());
}

#[test]
fn ground_in_one_dimension() {
    let out = normsol(&["ground", "-N", "1", "-p", "3", "--json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_schema(&v, "ground");
    assert!((v["u0"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert!((v["gamma"].as_f64().unwrap() - 4.0).abs() < 1e-8);
    assert_eq!(v["config"]["N"], 1);
}

#[test]
fn ground_in_the_plane() {
    let out = normsol(&["ground", "-N", "2", "-p", "3", "--json"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["u0"].as_f64().unwrap() - 2.2062).abs() < 1e-4);
}

#[test]
fn ground_text_output() {
    let out = normsol(&["ground", "-N", "1", "-p", "3"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("u0 = 1.414213"));
}

#[test]
fn ground_rejects_supercritical_exponent() {
    let out = normsol(&["ground", "-N", "3", "-p", "6"]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&normsol(&["ground", "-N", "2"])), 1);
    assert_eq!(code(&normsol(&["nonsense"])), 1);
    assert_eq!(code(&normsol(&["sync-check", "--matrix", "1,2;3"])), 1);
    assert_eq!(code(&normsol(&["sync-check", "--matrix", "1,x;x,1"])), 1);
    assert_eq!(code(&normsol(&["predict", "-N", "4", "--mu", "1", "--mu0", "2"])), 1);
    assert_eq!(code(&normsol(&["--help"])), 0);
}

#[test]
fn sweep_through_the_planar_figure_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = normsol(&[
        "alpha-sweep",
        "-N",
        "2",
        "--p-min",
        "3",
        "--p-max",
        "3",
        "-n",
        "1",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("integ_UW_N2.dat")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with('#') && lines[0].contains("N=2"));
    let cols: Vec<f64> = lines[1].split('\t').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 3.0);
    assert!(close(cols[1], 1.1047799, 5e-3));
}

#[test]
fn sweep_rows_are_sorted_and_hit_the_inset_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = normsol(&[
        "alpha-sweep",
        "-N",
        "4",
        "--p-min",
        "1.5",
        "--p-max",
        "2",
        "-n",
        "3",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("integ_UW_N4.dat")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (p, a) = l.split_once('\t').unwrap();
            (p.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert_eq!(rows[2].0, 2.0);
    assert!(close(rows[2].1, 23.516225, 5e-3));
}

#[test]
fn sweep_to_unwritable_path_exits_one() {
    let out = normsol(&["alpha-sweep", "-N", "1", "--p-min", "3", "--p-max", "3", "-n", "1", "-o", "/nonexistent/dir"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sync_check_two_components() {
    let out = normsol(&["sync-check", "--matrix", "1,3;3,2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_schema(&v, "sync-check");
    assert_eq!(v["verdict"], "nondegenerate_sufficient");
    let lambdas: Vec<f64> = v["lambdas"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((lambdas[0] - 3.0 / 7.0).abs() < 1e-10 && (lambdas[1] - 3.0).abs() < 1e-10);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(&keys[..5], ["schema_version", "command", "config", "verdict", "path"]);
}

#[test]
fn sync_check_single_component() {
    let out = normsol(&["sync-check", "--matrix", "2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["sigma"][0].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn sync_check_without_synchronized_state() {
    let out = normsol(&["sync-check", "--matrix", "1,1.5;1.5,2"]);
    assert_eq!(code(&out), 4);
    let v = json(&out);
    assert_schema(&v, "sync-check");
    assert_eq!(v["verdict"], "no_synchronized_state");
}

#[test]
fn sync_check_decoupled_is_a_risk() {
    let out = normsol(&["sync-check", "--matrix", "1,0;0,1"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["verdict"], "degenerate_risk");
}

#[test]
fn sync_check_reads_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.txt");
    std::fs::write(&path, "# Example\n1 3\n3 2\n").unwrap();
    let out = normsol(&["sync-check", "--matrix-file", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["verdict"], "nondegenerate_sufficient");
    assert_eq!(code(&normsol(&["sync-check", "--matrix-file", "/nonexistent"])), 1);
}

#[test]
fn predict_supercritical() {
    let out = normsol(&["predict", "-N", "3", "--mu", "0.25", "--mu0", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_schema(&v, "predict");
    assert_eq!(v["epsilon"], 0.25);
    assert_eq!(v["lambda"], 16.0);
    assert_eq!(v["lambda_exponent"], 2.0);
}

#[test]
fn predict_critical_formula() {
    let out = normsol(&["predict", "-N", "2", "--mu", "0.9999", "--mu0", "1", "--alpha-delta-gamma", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_schema(&v, "predict");
    assert!((v["epsilon"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn predict_refuses_the_wrong_side() {
    let out = normsol(&["predict", "-N", "2", "--mu", "1.5", "--mu0", "1", "--alpha-delta-gamma", "1"]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_schema(&v, "predict");
    assert_eq!(v["admissible"], false);
    assert!(v["epsilon"].is_null() && v["reason"].is_string());
    let out = normsol(&["predict", "-N", "3", "--mu", "2", "--mu0", "1"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["admissible"], false);
}

#[test]
fn predict_from_a_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.toml");
    std::fs::write(
        &path,
        "k = 2\nN = 2\n[[potential]]\nkind = \"polynomial\"\nterms = [{ exponents = [2, 0], coeff = 1.0 }, { exponents = [0, 2], coeff = 1.0 }, { exponents = [3, 0], coeff = 1.0 }]\n[[potential]]\nkind = \"quadratic\"\ncoeffs = [1.0, 1.0]\n",
    )
    .unwrap();
    let out = normsol(&["predict", "-N", "2", "--mu", "4.9", "--matrix", "1,3;3,2", "--model", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_schema(&v, "predict");
    assert_eq!(v["critical_point"]["nondegenerate"], true);
    assert_eq!(v["tau"][1], 0.0);
    assert!(v["tau"][0].as_f64().unwrap() < 0.0);
    // Γ = γ (σ1² + σ2²)(x1² + x2²) + γ σ1² x1³ gives μ0 = γ (σ1² + σ2²), ΔΓ = 4 μ0
    let mu0 = v["mu0"].as_f64().unwrap();
    assert!(close(v["delta_gamma"].as_f64().unwrap(), 4.0 * mu0, 1e-9));
}

#[test]
fn predict_without_synchronized_state_exits_four() {
    let out = normsol(&["predict", "-N", "3", "--mu", "1", "--matrix", "1,1.5;1.5,2"]);
    assert_eq!(code(&out), 4);
    assert_schema(&json(&out), "predict");
}

#[test]
fn outputs_are_deterministic() {
    let a = normsol(&["sync-check", "--matrix", "1,3;3,2"]);
    let b = normsol(&["sync-check", "--matrix", "1,3;3,2"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn figure_reproduction_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    for dir in [&first, &second] {
        let out = normsol(&["reproduce-figure", "-n", "1", "-o", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(first.path().join("summary.json")).unwrap()).unwrap();
    validate(&summary, &schema("reproduce-figure"), "$").unwrap();
    assert_eq!(summary["all_positive"], true);
    assert!(close(summary["panels"][0]["alpha_radial"].as_f64().unwrap(), 0.4192233, 5e-3));
    for dim in 1..=8 {
        let name = format!("integ_UW_N{dim}.dat");
        let a = std::fs::read(first.path().join(&name)).unwrap();
        let b = std::fs::read(second.path().join(&name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name}");
    }
    let a = std::fs::read_to_string(first.path().join("summary.json")).unwrap();
    let b = std::fs::read_to_string(second.path().join("summary.json")).unwrap();
    // the config echo carries the output directory
    assert_eq!(a.replace(first.path().to_str().unwrap(), "DIR"), b.replace(second.path().to_str().unwrap(), "DIR"));
}
