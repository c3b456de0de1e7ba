//! Headerless numeric CSV input and headered CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use scatterlab_core::linalg::Matrix;

use crate::error::CliError;

/// Parse headerless comma-separated numbers, one observation per row. Blank
/// lines are skipped; every other row must have the same width.
pub fn parse_matrix(text: &str, source: &str) -> Result<Matrix, CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::input(format!(
                            "{source}:{lineno}: '{field}' is not a finite number"
                        ))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::input(format!(
                    "{source}:{lineno}: expected {} fields, found {}",
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input(format!("{source}: no data rows")));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Matrix::from_row_major(n, d, rows.concat()).map_err(CliError::from)
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text, &path.display().to_string())
}

/// Parse a comma-separated vector such as `0,1.5,-2`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::input(format!("'{}' is not a finite number", f.trim())))
        })
        .collect()
}

/// A CSV table with one header row; floats use the shortest round-trip form.
pub struct CsvTable {
    text: String,
    width: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            text: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        debug_assert_eq!(fields.len(), self.width);
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match f {
                CsvField::Int(v) => write!(self.text, "{v}").unwrap(),
                CsvField::Float(v) => write!(self.text, "{v}").unwrap(),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum CsvField {
    Int(usize),
    Float(f64),
}

impl From<usize> for CsvField {
    fn from(v: usize) -> Self {
        CsvField::Int(v)
    }
}

impl From<f64> for CsvField {
    fn from(v: f64) -> Self {
        CsvField::Float(v)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::output(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::output(format!("cannot write {}: {e}", path.display())))
}
