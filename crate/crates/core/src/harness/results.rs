use std::fmt::Write as _;
use std::path::Path;

use super::{ExperimentReport, TableResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    /// Whitespace-aligned columns.
    TextTable,
    /// Comma-separated values.
    Csv,
}

impl ResultFormat {
    /// `.csv` selects comma-separated output; anything else a text table.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => ResultFormat::Csv,
            _ => ResultFormat::TextTable,
        }
    }
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub key: String,
    pub error: f64,
    pub iterations: f64,
    pub reduced_rows: f64,
    pub wall_time: f64,
}

pub(crate) fn reported_wall_time(r: &ExperimentReport) -> f64 {
    if r.config.record_wall_time {
        r.wall_time
    } else {
        0.0
    }
}

impl ResultRow {
    fn from_report(key: &str, r: &ExperimentReport) -> Self {
        ResultRow {
            key: key.to_string(),
            error: r.error,
            iterations: r.iterations as f64,
            reduced_rows: r.reduced_rows as f64,
            wall_time: reported_wall_time(r),
        }
    }

    fn cells(&self) -> [String; 5] {
        [
            self.key.clone(),
            format!("{:e}", self.error),
            self.iterations.to_string(),
            self.reduced_rows.to_string(),
            self.wall_time.to_string(),
        ]
    }
}

const COLUMNS: [&str; 4] = ["error", "iterations", "reduced_rows", "wall_time"];

/// Header, one row per sweep point and, for more than one point, an
/// `Average` row.
pub fn format_results(table: &TableResult, format: ResultFormat) -> String {
    let mut lines: Vec<[String; 5]> = Vec::with_capacity(table.rows.len() + 2);
    let mut header = [String::new(), String::new(), String::new(), String::new(), String::new()];
    header[0] = table.key_label.clone();
    for (i, c) in COLUMNS.iter().enumerate() {
        header[i + 1] = c.to_string();
    }
    lines.push(header);
    for (key, r) in &table.rows {
        lines.push(ResultRow::from_report(key, r).cells());
    }
    if table.rows.len() > 1 {
        lines.push(table.average().cells());
    }

    let mut out = String::new();
    match format {
        ResultFormat::Csv => {
            for l in &lines {
                let _ = writeln!(out, "{}", l.join(","));
            }
        }
        ResultFormat::TextTable => {
            let widths: Vec<usize> = (0..5)
                .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
                .collect();
            for l in &lines {
                let mut line = String::new();
                for (c, cell) in l.iter().enumerate() {
                    if c > 0 {
                        line.push_str("  ");
                    }
                    let _ = write!(line, "{cell:<width$}", width = widths[c]);
                }
                let _ = writeln!(out, "{}", line.trim_end());
            }
        }
    }
    out
}

/// Parses a file written by [`format_results`]; the header is skipped.
pub fn parse_results(text: &str, format: ResultFormat) -> Result<Vec<ResultRow>> {
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::invalid(format!("results line {line}: bad number `{s}`")))
    };
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cells: Vec<&str> = match format {
                ResultFormat::Csv => l.split(',').map(str::trim).collect(),
                ResultFormat::TextTable => l.split_whitespace().collect(),
            };
            if cells.len() != 5 {
                return Err(Error::invalid(format!("results line {}: expected 5 columns", i + 1)));
            }
            Ok(ResultRow {
                key: cells[0].to_string(),
                error: num(cells[1], i + 1)?,
                iterations: num(cells[2], i + 1)?,
                reduced_rows: num(cells[3], i + 1)?,
                wall_time: num(cells[4], i + 1)?,
            })
        })
        .collect()
}

pub fn emit_results(table: &TableResult, path: &Path, format: ResultFormat) -> Result<()> {
    crate::io::write_file(path, format_results(table, format).as_bytes())
}
