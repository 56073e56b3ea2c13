//! Report shape and determinism: generated reports validate against the
//! shipped JSON schemas, and criteria are pure functions of their
//! configuration.

use std::path::Path;

use serde_json::Value;

use attn_transport::attention::AttentionSpec;
use attn_transport::kernels::{LookupMap, Potential};
use attn_transport::regularity::{empirical_ratio, AuditMode, TrialConfig};
use attn_transport::suite::{criteria, CriterionResult, SuiteConfig, SuiteReport};

/// Validates the subset of JSON Schema the shipped schemas use: `type`,
/// `required`, `properties`, `items`, `minimum`.
fn validate(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            other => return Err(format!("{path}: unsupported schema type {other}")),
        };
        if !ok {
            return Err(format!("{path}: expected {ty}, got {value}"));
        }
    }
    if let Some(minimum) = schema.get("minimum").and_then(Value::as_f64) {
        if let Some(number) = value.as_f64() {
            if number < minimum {
                return Err(format!("{path}: {number} below minimum {minimum}"));
            }
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required {
            let key = key.as_str().expect("required keys are strings");
            if value.get(key).is_none() {
                return Err(format!("{path}: missing required key {key}"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (key, sub) in props {
            if let Some(inner) = value.get(key) {
                validate(sub, inner, &format!("{path}.{key}"))?;
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(array) = value.as_array() {
            for (i, inner) in array.iter().enumerate() {
                validate(items, inner, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

fn load_schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file")).expect("schema json")
}

#[test]
fn bound_report_matches_schema() {
    let spec = AttentionSpec {
        potential: Potential::Gaussian,
        lookup: LookupMap::Identity,
    };
    let cfg = TrialConfig {
        trials: 20,
        hill_climb_steps: 5,
        ..TrialConfig::default()
    };
    let report = empirical_ratio(&spec, AuditMode::Query, &cfg).unwrap();
    let value = serde_json::to_value(&report).unwrap();
    let schema = load_schema("bound_report.schema.json");
    validate(&schema, &value, "report").unwrap();
}

#[test]
fn suite_report_matches_schema() {
    // assembled rather than run: the schema constrains the shape
    let report = SuiteReport {
        master_seed: 7,
        trials: 3,
        all_passed: true,
        criteria: vec![CriterionResult {
            name: "01_equivalence".into(),
            passed: true,
            asserted: true,
            duration_ms: 12,
            details: serde_json::json!({"max_deviation": 1e-12}),
        }],
    };
    let value = serde_json::to_value(&report).unwrap();
    let schema = load_schema("report.schema.json");
    validate(&schema, &value, "report").unwrap();
}

#[test]
fn criteria_are_deterministic_given_config() {
    let config = SuiteConfig::default();
    for criterion in criteria::all() {
        if !matches!(criterion.name, "08_ratio_lemma" | "11_degenerate_probe") {
            continue;
        }
        let a = (criterion.run)(&config).unwrap();
        let b = (criterion.run)(&config).unwrap();
        assert_eq!(a.passed, b.passed);
        assert_eq!(a.details, b.details, "{} not deterministic", criterion.name);
    }
}

fn strip_timings(mut report: Value) -> Value {
    if let Some(criteria) = report.get_mut("criteria").and_then(Value::as_array_mut) {
        for criterion in criteria {
            if let Some(obj) = criterion.as_object_mut() {
                obj.remove("duration_ms");
            }
        }
    }
    report
}

#[test]
fn repeated_suite_runs_agree_up_to_timings() {
    let config = SuiteConfig::default();
    let first = serde_json::to_value(attn_transport::suite::run_suite(&config).unwrap()).unwrap();
    let second = serde_json::to_value(attn_transport::suite::run_suite(&config).unwrap()).unwrap();
    assert_eq!(strip_timings(first), strip_timings(second));
}

#[test]
fn suite_writes_requested_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = SuiteConfig {
        trials: 3,
        output_path: Some(dir.path().to_path_buf()),
        ..SuiteConfig::default()
    };
    let report = attn_transport::suite::run_suite(&config).unwrap();
    assert!(report.all_passed);
    for index in 0..3 {
        assert!(dir
            .path()
            .join(format!("instance_{index:04}.json"))
            .exists());
    }
    assert!(!dir.path().join("instance_0003.json").exists());
    assert!(dir.path().join("smoothed_projection.csv").exists());
    let written: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let schema = load_schema("report.schema.json");
    validate(&schema, &written, "report").unwrap();
}
