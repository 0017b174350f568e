//! CSV tables with `#` metadata lines and companion gnuplot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// `# key: value` lines after the config line.
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { meta: Vec::new(), header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.push((key.into(), value.into()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of a numeric column; non-numeric cells become NaN.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(c) = self.column(name) else { return Vec::new() };
        self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect()
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self, provenance: &str) -> String {
        let mut s = String::new();
        writeln!(s, "# config: {provenance}").unwrap();
        for (k, v) in &self.meta {
            writeln!(s, "# {k}: {v}").unwrap();
        }
        writeln!(s, "{}", self.header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", r.join(",")).unwrap();
        }
        s
    }
}

/// Path of the plot script written next to `csv`.
pub fn plot_path(csv: &Path) -> PathBuf {
    csv.with_extension("gp")
}

/// Writes the CSV and its plot script, creating parent directories.
pub fn write_outputs(csv_path: &Path, table: &Table, provenance: &str, plot: &str) -> Result<()> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(csv_path, table.to_csv(provenance))?;
    fs::write(plot_path(csv_path), plot)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0, -2.5e-17, 1e300, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn layout() {
        let mut t = Table::new(&["a", "b"]);
        t.meta("metric", "rms");
        t.push(vec!["1.0".into(), "x".into()]);
        assert_eq!(t.to_csv("{}"), "# config: {}\n# metric: rms\na,b\n1.0,x\n");
        assert_eq!(t.floats("a"), vec![1.0]);
        assert!(t.floats("b")[0].is_nan());
    }

    #[test]
    fn writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_outputs(&p, &Table::new(&["a"]), "{}", "plot 1\n").unwrap();
        assert!(p.exists() && plot_path(&p).exists());
    }
}
