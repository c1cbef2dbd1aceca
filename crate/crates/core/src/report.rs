//! JSON report assembly.
//!
//! Reports carry `"schema": 1` and every float is rounded to 9 significant
//! digits before serialization, so identical runs serialize byte-identically
//! and golden files stay stable.

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// Round to 9 significant digits via decimal round trip.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().unwrap()
}

/// Round every float in the tree; integers are left untouched.
pub fn round_json_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if !n.is_i64() && !n.is_u64() {
                if let Some(f) = n.as_f64() {
                    if let Some(num) = serde_json::Number::from_f64(round_sig(f)) {
                        *value = Value::Number(num);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json_floats),
        Value::Object(map) => map.values_mut().for_each(round_json_floats),
        _ => {}
    }
}

/// Wrap a report body with the schema version and round its floats.
pub fn finalize(mut body: Map<String, Value>) -> Value {
    body.insert("schema".to_string(), json!(SCHEMA_VERSION));
    let mut value = Value::Object(body);
    round_json_floats(&mut value);
    value
}

/// Serialize with a trailing newline; key order is sorted (BTreeMap-backed),
/// so equal values yield equal bytes.
pub fn to_bytes(report: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}
