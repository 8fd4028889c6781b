//! Deterministic JSON/CSV artifact emission. Identical configs must yield
//! byte-identical files, so everything serializes through ordered maps and
//! no artifact carries timestamps. Any non-finite number fails the run
//! before a file is written.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Recursively rejects NaN/infinite numbers; serde_json would otherwise
/// silently emit `null`.
pub fn check_finite(value: &Value, path: &str) -> Result<()> {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if !f.is_finite() {
                    return Err(Error::NonFinite(path.to_string()));
                }
            }
            Ok(())
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                check_finite(v, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        Value::Object(map) => {
            for (k, v) in map {
                check_finite(v, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Summary artifact: schema version, experiment id, measured constants,
/// and free-form detail.
pub fn summary_json(
    kind: &str,
    fingerprint: &str,
    measured: &BTreeMap<String, f64>,
    detail: Value,
) -> Result<Value> {
    let measured_json: BTreeMap<String, Value> = measured
        .iter()
        .map(|(k, v)| {
            serde_json::Number::from_f64(*v)
                .map(|n| (k.clone(), Value::Number(n)))
                .ok_or_else(|| Error::NonFinite(format!("measured.{k}")))
        })
        .collect::<Result<_>>()?;
    let value = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": kind,
        "fingerprint": fingerprint,
        "measured": measured_json,
        "detail": detail,
    });
    check_finite(&value, "summary")?;
    Ok(value)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    check_finite(value, path.to_string_lossy().as_ref())?;
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Minimal CSV writer: header plus rows, numbers through the shortest
/// round-trippable formatting.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> CsvTable {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        for row in &self.rows {
            for cell in row {
                if cell == "NaN" || cell == "inf" || cell == "-inf" {
                    return Err(Error::NonFinite(format!("csv {path:?}")));
                }
            }
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn fmt_f64(v: f64) -> String {
    // ryu-style shortest representation via serde_json keeps artifacts stable
    serde_json::Number::from_f64(v)
        .map(|n| n.to_string())
        .unwrap_or_else(|| "NaN".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let v = serde_json::json!({"x": [1.0, 2.0]});
        assert!(check_finite(&v, "t").is_ok());
        let mut m = BTreeMap::new();
        m.insert("bad".to_string(), f64::NAN);
        assert!(summary_json("k", "fp", &m, Value::Null).is_err());
    }

    #[test]
    fn csv_shape() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.5)]);
        assert_eq!(t.render(), "a,b\n1,0.5\n");
    }

    #[test]
    fn deterministic_json_text() {
        let mut m = BTreeMap::new();
        m.insert("z".to_string(), 1.25);
        m.insert("a".to_string(), 3.5);
        let v1 = summary_json("k", "fp", &m, serde_json::json!({"n": 1})).unwrap();
        let v2 = summary_json("k", "fp", &m, serde_json::json!({"n": 1})).unwrap();
        assert_eq!(serde_json::to_string(&v1).unwrap(), serde_json::to_string(&v2).unwrap());
    }
}
