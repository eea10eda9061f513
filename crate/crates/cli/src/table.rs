//! Numeric tables and their CSV form: header row, LF line endings, every
//! value in scientific notation with 12 significant digits.

use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<f64>) -> CliResult<()> {
        if row.len() != self.headers.len() {
            return Err(CliError::Numeric(format!(
                "row has {} values for {} columns",
                row.len(),
                self.headers.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Serializes the table. Fails on any non-finite value.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(CliError::Numeric(format!(
                    "non-finite value {} in row {r}, column `{}`",
                    row[c], self.headers[c]
                )));
            }
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        writer.write_record(&self.headers).map_err(io)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|v| format!("{v:.11e}"))).map_err(io)?;
        }
        writer.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let bytes = self.to_csv()?;
        std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv().unwrap(), b"a,b\n");
    }

    #[test]
    fn twelve_significant_digits() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![1.0 / 3.0, -2.5e-7]).unwrap();
        t.push(vec![0.0, 6.0e9]).unwrap();
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "x,y\n3.33333333333e-1,-2.50000000000e-7\n0.00000000000e0,6.00000000000e9\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn non_finite_values_are_refused() {
        let mut t = Table::new(&["x"]);
        t.push(vec![f64::NAN]).unwrap();
        assert!(matches!(t.to_csv(), Err(CliError::Numeric(_))));
        let mut t = Table::new(&["x"]);
        t.push(vec![f64::INFINITY]).unwrap();
        assert!(t.to_csv().is_err());
    }

    #[test]
    fn ragged_rows_are_refused() {
        let mut t = Table::new(&["x", "y"]);
        assert!(t.push(vec![1.0]).is_err());
    }
}
