//! Versioned acceptance thresholds, one TOML table per scenario.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

pub const SUPPORTED_VERSION: u32 = 1;

const BUILTIN: &str = include_str!("../config/thresholds.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Thresholds {
    pub version: u32,
    #[serde(flatten)]
    pub sections: BTreeMap<String, BTreeMap<String, [f64; 2]>>,
}

impl Thresholds {
    pub fn parse(text: &str) -> Result<Self> {
        let t: Thresholds = toml::from_str(text).context("malformed thresholds file")?;
        if t.version != SUPPORTED_VERSION {
            bail!("thresholds version {} is not supported (expected {SUPPORTED_VERSION})", t.version);
        }
        for (name, sec) in &t.sections {
            for (key, [lo, hi]) in sec {
                if lo > hi {
                    bail!("[{name}] {key}: empty range [{lo}, {hi}]");
                }
            }
        }
        Ok(t)
    }

    /// The file shipped in `config/thresholds.toml`.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled thresholds parse")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn range(&self, scenario: &str, key: &str) -> Option<(f64, f64)> {
        self.sections.get(scenario)?.get(key).map(|r| (r[0], r[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_every_scenario() {
        let t = Thresholds::builtin();
        for s in crate::scenario::SCENARIOS {
            assert!(t.sections.contains_key(*s), "{s}");
        }
        assert_eq!(t.range("test3", "order_l2_u"), Some((1.7, 2.3)));
        assert_eq!(t.range("test8", "order_l2_u").unwrap().0, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Thresholds::parse("version = 2\n").is_err());
        assert!(Thresholds::parse("version = 1\n[a]\nx = [2.0, 1.0]\n").is_err());
        assert!(Thresholds::parse("version = 1\n[a]\nx = 3\n").is_err());
    }
}
