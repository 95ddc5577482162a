//! Plain CSV artifacts: comma separated, `\n` line endings, `{:.16e}` numbers.

use crate::multiplier::{GridSpec, StateField};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
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

    pub fn write(&self, path: &Path) -> Result<(), CsvError> {
        fs::write(path, self.render()).map_err(|source| CsvError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Columns t, x[, y], re, im; one row per grid point in storage order.
pub fn field_table(field: &StateField) -> Table {
    let dim = field.grid.dim();
    let mut table = if dim == 1 {
        Table::new(&["t", "x", "re", "im"])
    } else {
        Table::new(&["t", "x", "y", "re", "im"])
    };
    for (i, v) in field.values.iter().enumerate() {
        let mut row = vec![fmt_num(field.time)];
        row.extend(field.grid.point(i).iter().map(|c| fmt_num(*c)));
        row.push(fmt_num(v.re));
        row.push(fmt_num(v.im));
        table.push(row);
    }
    table
}

pub fn write_field_csv(path: &Path, field: &StateField) -> Result<(), CsvError> {
    field_table(field).write(path)
}

pub fn parse_field_csv(text: &str, path: &str) -> Result<StateField, CsvError> {
    let bad = |line: usize, message: String| CsvError::Format {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let dim = match header {
        "t,x,re,im" => 1,
        "t,x,y,re,im" => 2,
        other => return Err(bad(1, format!("unexpected header '{other}'"))),
    };
    let mut time = None;
    let mut first = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells = line
            .split(',')
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| bad(i + 2, format!("'{c}' is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if cells.len() != dim + 3 {
            return Err(bad(
                i + 2,
                format!("expected {} cells, found {}", dim + 3, cells.len()),
            ));
        }
        match time {
            None => time = Some(cells[0]),
            Some(t) if t != cells[0] => {
                return Err(bad(i + 2, "time column is not constant".into()))
            }
            _ => {}
        }
        if first.is_empty() {
            first = cells[1..=dim].to_vec();
        }
        values.push(Complex64::new(cells[dim + 1], cells[dim + 2]));
    }
    let count = values.len();
    let n = if dim == 1 {
        count
    } else {
        (count as f64).sqrt().round() as usize
    };
    if n.pow(dim as u32) != count || first.is_empty() {
        return Err(bad(
            count + 1,
            format!("{count} rows do not form a {dim}-dimensional grid"),
        ));
    }
    let grid = GridSpec::new(dim, n, -first[0]).map_err(|e| bad(2, e.to_string()))?;
    StateField::new(grid, time.unwrap_or(0.0), values).map_err(|e| bad(2, e.to_string()))
}

pub fn read_field_csv(path: &Path) -> Result<StateField, CsvError> {
    let text = fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_field_csv(&text, &path.display().to_string())
}

/// Human-readable check line, e.g. `ml_laplace_pair = 3.100e-9 <= 1e-6: pass`.
pub fn describe(name: &str, value: f64, relation: &str, threshold: f64, pass: bool) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{name} = {value:.3e} {relation} {threshold:e}: {}",
        if pass { "pass" } else { "FAIL" }
    );
    s
}
