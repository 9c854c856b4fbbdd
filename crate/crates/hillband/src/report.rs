//! Deterministic artifact writers: CSV with fixed 17-significant-digit
//! formatting, JSON with struct-declared key order, and the failure
//! manifest emitted when a verification run trips an assertion.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::numerics::fnv1a;

/// 17 significant digits: round-trips every f64 and is byte-stable.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a hash of the canonical config bytes, hex-encoded.
pub fn config_hash(config_bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a(config_bytes))
}

/// A named pass/fail check with the measured value and its bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// "le", "ge", or "abs_le" (|value| <= bound).
    pub relation: String,
    pub pass: bool,
}

impl Check {
    pub fn le(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            bound,
            relation: "le".into(),
            pass: value <= bound,
        }
    }
    pub fn ge(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            bound,
            relation: "ge".into(),
            pass: value >= bound,
        }
    }
    pub fn abs_le(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            bound,
            relation: "abs_le".into(),
            pass: value.abs() <= bound,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureManifest {
    pub config_hash: String,
    pub failed: Vec<Check>,
}

/// Output directory handle; all writers go through it so every file ends
/// up under one root with LF endings.
pub struct Artifacts {
    dir: PathBuf,
    pub config_hash: String,
}

impl Artifacts {
    pub fn new(dir: &Path, config_bytes: &[u8]) -> Result<Artifacts> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            config_hash: config_hash(config_bytes),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }

    /// CSV with a header row; every cell formatted by the supplied rows.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut f = fs::File::create(self.path(name))?;
        writeln!(f, "{}", header.join(","))?;
        for row in rows {
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips() {
        for &x in &[1.0, -0.1, std::f64::consts::PI, 1e-300, 6.02e23] {
            let s = fmt_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn checks_evaluate_relations() {
        assert!(Check::le("a", 1.0, 2.0).pass);
        assert!(!Check::le("a", 3.0, 2.0).pass);
        assert!(Check::ge("b", 3.0, 2.0).pass);
        assert!(Check::abs_le("c", -1.5, 2.0).pass);
        assert!(!Check::abs_le("c", -2.5, 2.0).pass);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(b"{}"), config_hash(b"{}"));
        assert_ne!(config_hash(b"{}"), config_hash(b"{ }"));
    }
}
