//! CSV files with `#` header blocks and 17-digit numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub const UNITS: &str = "length nm, time fs, energy eV, wavenumber 1/nm";

/// Table assembled in memory and written in one go.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[(String, String)], columns: &[String]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# tool: resopack {}", env!("CARGO_PKG_VERSION"));
        for (k, v) in header {
            let _ = writeln!(text, "# {k}: {v}");
        }
        let _ = writeln!(text, "# units: {UNITS}");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text, width: columns.len() }
    }

    /// One row; `None` leaves the cell empty.
    pub fn row(&mut self, cells: &[Option<f64>]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            if let Some(v) = c {
                let _ = write!(self.text, "{}", number(*v));
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut t = Table::new(&[("system".into(), "db".into())], &["a".into(), "b".into()]);
        t.row(&[Some(0.1), None]);
        let lines: Vec<&str> = t.text.lines().collect();
        assert!(lines[0].starts_with("# tool: resopack"));
        assert_eq!(lines[1], "# system: db");
        assert_eq!(lines[3], "a,b");
        assert_eq!(lines[4], "1.0000000000000001e-1,");
        assert_eq!(lines[4].split(',').next().unwrap().parse::<f64>().unwrap(), 0.1);
    }
}
