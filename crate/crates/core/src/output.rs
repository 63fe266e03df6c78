//! CSV helpers shared by the report writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

/// 17 significant digits, `.` decimal separator.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0e0" vs "0e0" churn
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Minimal CSV table: header plus rows of already formatted cells, LF endings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}
