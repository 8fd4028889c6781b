//! Regression baselines for measured constants. The theory proves that
//! constants exist but never names values, so first runs freeze what they
//! measure and later runs must reproduce it within the stored tolerance.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub value: f64,
    /// Relative tolerance; absolute slack `tol * max(|value|, 1e-12)`.
    pub tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    /// Fingerprint -> constant name -> frozen value.
    pub entries: BTreeMap<String, BTreeMap<String, BaselineEntry>>,
}

impl Baseline {
    pub fn load(path: &Path) -> Result<Baseline> {
        if !path.exists() {
            return Ok(Baseline::default());
        }
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn has(&self, fingerprint: &str) -> bool {
        self.entries.contains_key(fingerprint)
    }

    /// Freezes measured constants under the fingerprint.
    pub fn update(&mut self, fingerprint: &str, measured: &BTreeMap<String, f64>, tol: f64) {
        let slot = self.entries.entry(fingerprint.to_string()).or_default();
        slot.clear();
        for (k, v) in measured {
            slot.insert(k.clone(), BaselineEntry { value: *v, tol });
        }
    }

    /// Compares against frozen values; Ok(list of comparison lines) when
    /// everything reproduces, Err with the diff report otherwise. Unknown
    /// fingerprints compare vacuously.
    pub fn compare(&self, fingerprint: &str, measured: &BTreeMap<String, f64>) -> Result<Vec<String>> {
        let Some(stored) = self.entries.get(fingerprint) else {
            return Ok(vec!["no baseline for this configuration".to_string()]);
        };
        let mut lines = Vec::new();
        let mut failures = Vec::new();
        for (name, entry) in stored {
            match measured.get(name) {
                None => failures.push(format!("{name}: missing from this run")),
                Some(v) => {
                    let slack = entry.tol * entry.value.abs().max(1e-12);
                    let ok = (v - entry.value).abs() <= slack;
                    let line = format!(
                        "{name}: measured {v:.6e}, stored {:.6e} (tol {:.0}%)",
                        entry.value,
                        entry.tol * 100.0
                    );
                    if ok {
                        lines.push(line);
                    } else {
                        failures.push(line);
                    }
                }
            }
        }
        for name in measured.keys() {
            if !stored.contains_key(name) {
                failures.push(format!("{name}: not in baseline"));
            }
        }
        if failures.is_empty() {
            Ok(lines)
        } else {
            Err(Error::Regression(failures.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measured(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn round_trip_and_compare() {
        let mut b = Baseline::default();
        b.update("fp", &measured(&[("c1", 2.0), ("c2", 0.5)]), 0.25);
        assert!(b.compare("fp", &measured(&[("c1", 2.3), ("c2", 0.45)])).is_ok());
        assert!(b.compare("fp", &measured(&[("c1", 3.0), ("c2", 0.5)])).is_err());
        assert!(b.compare("fp", &measured(&[("c1", 2.0)])).is_err());
        assert!(b.compare("other", &measured(&[("c1", 99.0)])).is_ok());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("lh-baseline-test");
        let path = dir.join("b.json");
        let mut b = Baseline::default();
        b.update("fp", &measured(&[("k", 1.5)]), 0.1);
        b.save(&path).unwrap();
        let loaded = Baseline::load(&path).unwrap();
        assert_eq!(b, loaded);
        std::fs::remove_dir_all(&dir).ok();
    }
}
