//! Bit-stable JSON and CSV emission.
//!
//! Object keys are sorted, floats carry 17 significant digits and integers are
//! written as integers, so equal values always produce equal bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use idt_core::fmt::float17;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&float17(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.iter().all(|x| !x.is_object() && !x.is_array()) {
                // scalars stay on one line
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, x, level + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], level + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_stable_json(value)?)?;
    Ok(())
}

/// Flattens a JSON report into `field,value` rows; nested keys are joined by dots.
pub fn to_field_csv<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut rows = Vec::new();
    flatten("", &v, &mut rows);
    let mut out = String::from("field,value\n");
    for (k, x) in rows {
        let _ = writeln!(out, "{k},{x}");
    }
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for k in keys {
                flatten(&join(k), &map[k], rows);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), x, rows);
            }
        }
        _ => {
            let mut s = String::new();
            write_value(&mut s, v, 0);
            // quote anything a CSV reader could split
            if s.contains(',') || s.contains('"') {
                s = format!("\"{}\"", s.replace('"', "\"\""));
            }
            rows.push((prefix.to_string(), s));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [1, 2.0], "c": {"z": "x", "y": null}});
        let s = to_stable_json(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [1, 2.0000000000000000e0],\n  \"b\": 1.5000000000000000e0,\n  \"c\": {\n    \"y\": null,\n    \"z\": \"x\"\n  }\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], 1.5);
    }

    #[test]
    fn field_csv_flattens() {
        let v = json!({"r": {"x": 0.5}, "name": "a,b", "list": [1, 2]});
        let s = to_field_csv(&v).unwrap();
        assert_eq!(s, "field,value\nlist.0,1\nlist.1,2\nname,\"\"\"a,b\"\"\"\nr.x,5.0000000000000000e-1\n");
    }
}
