//! JSON config loading with inline-flag overrides.
//!
//! A run config starts as the JSON object from `--config` (or `{}`), inline
//! flags are written into it, strings like `"10db"` become linear numbers,
//! and the result is deserialized into the command's typed config. The typed
//! config, serialized back, is the echo embedded in every output.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Parses a number, converting a trailing `db`/`dB` from decibels to linear.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let (body, db) = match lower.strip_suffix("db") {
        Some(b) => (b.trim(), true),
        None => (lower.as_str(), false),
    };
    let x: f64 = body
        .parse()
        .map_err(|_| CliError::Usage(format!("'{s}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Usage(format!("'{s}' is not finite")));
    }
    Ok(if db { 10f64.powf(x / 10.0) } else { x })
}

pub fn load(path: Option<&Path>) -> Result<Value, CliError> {
    let Some(path) = path else {
        return Ok(Value::Object(Map::new()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "malformed config {} at line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    if !value.is_object() {
        return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
    }
    Ok(value)
}

/// Writes `x` at the dotted `path`, creating intermediate objects.
pub fn set(root: &mut Value, path: &str, x: Value) {
    let mut cur = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            obj.insert(part.to_string(), x);
            return;
        }
        cur = obj.entry(part).or_insert_with(|| Value::Object(Map::new()));
    }
}

pub fn set_number(root: &mut Value, path: &str, s: Option<&str>) -> Result<(), CliError> {
    if let Some(s) = s {
        set(root, path, serde_json::json!(parse_number(s)?));
    }
    Ok(())
}

pub fn set_json<T: serde::Serialize>(root: &mut Value, path: &str, x: Option<T>) {
    if let Some(x) = x {
        set(root, path, serde_json::to_value(x).expect("serializable"));
    }
}

fn linearize(v: &mut Value) -> Result<(), CliError> {
    match v {
        Value::String(s) if s.to_ascii_lowercase().ends_with("db") => {
            *v = serde_json::json!(parse_number(s)?);
        }
        Value::Array(items) => items.iter_mut().try_for_each(linearize)?,
        Value::Object(map) => map.values_mut().try_for_each(linearize)?,
        _ => {}
    }
    Ok(())
}

pub fn finish<T: DeserializeOwned>(mut v: Value) -> Result<T, CliError> {
    linearize(&mut v)?;
    if let Some(found) = v.get("schema_version") {
        if found.as_u64() != Some(SCHEMA_VERSION as u64) {
            return Err(CliError::Usage(format!(
                "unsupported schema_version {found} (expected {SCHEMA_VERSION})"
            )));
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
}

/// A comma list of numbers, or `from:to:points` for a log-spaced grid.
pub fn parse_grid(s: &str) -> Result<Value, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let points: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad point count in '{s}'")))?;
        return Ok(serde_json::json!({
            "log_from": parse_number(parts[0])?,
            "log_to": parse_number(parts[1])?,
            "points": points,
        }));
    }
    let values = s.split(',').map(parse_number).collect::<Result<Vec<_>, _>>()?;
    Ok(serde_json::json!(values))
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("'{p}' is not a non-negative integer")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decibels() {
        assert_eq!(parse_number("10").unwrap(), 10.0);
        assert!((parse_number("10db").unwrap() - 10.0).abs() < 1e-12);
        assert!((parse_number("20 dB").unwrap() - 100.0).abs() < 1e-9);
        assert!((parse_number("-3db").unwrap() - 0.501_187_233_627_272_2).abs() < 1e-12);
        assert!(parse_number("ten").is_err());
    }

    #[test]
    fn nested_set_and_linearize() {
        let mut v = serde_json::json!({"params": {"p1": "10db"}});
        set(&mut v, "params.p2", serde_json::json!(3.0));
        set(&mut v, "n1", serde_json::json!(5));
        linearize(&mut v).unwrap();
        assert_eq!(v["params"]["p2"], 3.0);
        assert!((v["params"]["p1"].as_f64().unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(v["n1"], 5);
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2.5").unwrap(), serde_json::json!([1.0, 2.5]));
        assert_eq!(parse_grid("1.2:300:50").unwrap()["points"], 50);
        assert_eq!(parse_u64_list("512, 1024").unwrap(), vec![512, 1024]);
    }

    #[test]
    fn rejects_wrong_schema() {
        let v = serde_json::json!({"schema_version": 2});
        let r: Result<serde_json::Value, _> = finish(v);
        assert!(r.is_err());
    }
}
