//! Threshold checks and CSV output.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};

use crate::config::Thresholds;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub range: Option<(f64, f64)>,
}

impl Check {
    pub fn new(th: &Thresholds, scenario: &str, name: &str, value: f64) -> Self {
        Check { name: name.to_string(), value, range: th.range(scenario, name) }
    }

    /// Unconfigured checks are informational and always pass.
    pub fn passed(&self) -> bool {
        match self.range {
            Some((lo, hi)) => self.value >= lo && self.value <= hi,
            None => true,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.range {
            Some((lo, hi)) => write!(
                f,
                "{} {} = {:.6e} in [{lo:e}, {hi:e}]",
                if self.passed() { "PASS" } else { "FAIL" },
                self.name,
                self.value
            ),
            None => write!(f, "INFO {} = {:.6e}", self.name, self.value),
        }
    }
}

/// CSV table preceded by `# key=value` header lines.
pub struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { header: Vec::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.header.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        out.push_str(std::str::from_utf8(&w.into_inner()?)?);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_file(path, &self.to_csv()?).with_context(|| format!("writing {}", path.display()))
    }
}

/// Shortest round-trip representation, so repeated runs are byte-identical.
pub fn f(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_ranges() {
        let th = Thresholds::parse("version = 1\n[s]\nx = [0.0, 1.0]\n").unwrap();
        assert!(Check::new(&th, "s", "x", 0.5).passed());
        assert!(!Check::new(&th, "s", "x", 1.5).passed());
        assert!(!Check::new(&th, "s", "x", f64::NAN).passed());
        assert!(Check::new(&th, "s", "y", 7.0).passed());
        assert!(Check::new(&th, "s", "x", 2.0).to_string().starts_with("FAIL x"));
    }

    #[test]
    fn csv_with_header() {
        let mut t = Table::new(&["a", "b"]).meta("seed", 42);
        t.push(vec![f(0.1), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "# seed=42\na,b\n0.1,\"x,y\"\n");
    }
}
