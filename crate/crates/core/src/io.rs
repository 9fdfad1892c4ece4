//! CSV ingestion.
//!
//! Numeric matrices are headerless: one observation per line. Curve files
//! carry the grid times on their first line and one curve per following
//! line. If the first cell of the first line is not a number, the first
//! column holds a group label for every curve.
//!
//! Error positions are 1-based lines and columns of the file.

use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{DepthError, Result};
use crate::functional::{CurveSample, Grid};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| DepthError::Io(format!("{}: {e}", path.display())))
}

fn csv_error(e: csv::Error) -> DepthError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    DepthError::Parse {
        line,
        column: 0,
        message: e.to_string(),
    }
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| DepthError::Parse {
        line,
        column,
        message: format!("not a number: {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(DepthError::Parse {
            line,
            column,
            message: format!("non-finite value: {cell:?}"),
        });
    }
    Ok(v)
}

/// Numeric cells of a record starting at field `skip`.
fn parse_row(record: &csv::StringRecord, skip: usize, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(j, cell)| parse_cell(cell, line, j + 1))
        .collect()
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Skips records whose cells are all empty.
fn records<R: Read>(input: R) -> impl Iterator<Item = Result<csv::StringRecord>> {
    reader(input)
        .into_records()
        .map(|r| r.map_err(csv_error))
        .filter(|r| !matches!(r, Ok(rec) if rec.iter().all(str::is_empty)))
}

/// Reads a headerless numeric matrix.
pub fn read_matrix<R: Read>(input: R) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut p = None;
    let mut n = 0;
    for record in records(input) {
        let record = record?;
        let line = record_line(&record);
        let row = parse_row(&record, 0, line)?;
        match p {
            None => p = Some(row.len()),
            Some(p) if p != row.len() => {
                return Err(DepthError::Parse {
                    line,
                    column: row.len().min(p) + 1,
                    message: format!("expected {p} values, found {}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
        n += 1;
    }
    let p = p.ok_or(DepthError::EmptyInput("csv file"))?;
    Dataset::new(n, p, values)
}

pub fn read_matrix_path(path: impl AsRef<Path>) -> Result<Dataset> {
    read_matrix(open(path.as_ref())?)
}

/// Contents of a curve file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    /// Grid times as written in the file.
    pub times: Vec<f64>,
    pub grid: Arc<Grid>,
    pub curves: Vec<Vec<f64>>,
    /// One label per curve when the file has a label column.
    pub labels: Option<Vec<String>>,
}

impl CurveFile {
    /// All curves as one sample.
    pub fn sample(&self, label: Option<String>) -> Result<CurveSample> {
        CurveSample::new(self.grid.clone(), &self.curves, label)
    }

    /// One sample per distinct label, in order of first appearance.
    pub fn groups(&self) -> Result<Vec<CurveSample>> {
        let Some(labels) = &self.labels else {
            return Ok(vec![self.sample(None)?]);
        };
        let mut names: Vec<&String> = Vec::new();
        for l in labels {
            if !names.contains(&l) {
                names.push(l);
            }
        }
        names
            .into_iter()
            .map(|name| {
                let rows: Vec<&Vec<f64>> = self
                    .curves
                    .iter()
                    .zip(labels)
                    .filter(|(_, l)| *l == name)
                    .map(|(c, _)| c)
                    .collect();
                let rows: Vec<&[f64]> = rows.into_iter().map(Vec::as_slice).collect();
                CurveSample::new(self.grid.clone(), &rows, Some(name.clone()))
            })
            .collect()
    }
}

pub fn read_curves<R: Read>(input: R) -> Result<CurveFile> {
    let mut it = records(input);
    let header = it.next().ok_or(DepthError::EmptyInput("curve file"))??;
    let header_line = record_line(&header);
    let first = header.get(0).unwrap_or("");
    let labelled = first.is_empty() || first.parse::<f64>().is_err();
    let skip = labelled as usize;
    let times = parse_row(&header, skip, header_line)?;
    let grid = Grid::new(&times).map_err(|e| DepthError::Parse {
        line: header_line,
        column: 0,
        message: e.to_string(),
    })?;
    let mut curves = Vec::new();
    let mut labels = Vec::new();
    for record in it {
        let record = record?;
        let line = record_line(&record);
        let row = parse_row(&record, skip, line)?;
        if row.len() != times.len() {
            return Err(DepthError::Parse {
                line,
                column: row.len().min(times.len()) + skip + 1,
                message: format!("expected {} values, found {}", times.len(), row.len()),
            });
        }
        if labelled {
            labels.push(record.get(0).unwrap_or("").to_string());
        }
        curves.push(row);
    }
    if curves.is_empty() {
        return Err(DepthError::EmptyInput("curve file has no curves"));
    }
    Ok(CurveFile {
        times,
        grid,
        curves,
        labels: labelled.then_some(labels),
    })
}

pub fn read_curves_path(path: impl AsRef<Path>) -> Result<CurveFile> {
    read_curves(open(path.as_ref())?)
}
