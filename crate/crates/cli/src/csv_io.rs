//! CSV ingestion and emission with explicit missing-outcome handling.
//!
//! Input files are UTF-8, comma-separated, with a header row. An outcome
//! cell that is empty or the literal `NA` means the outcome is missing; the
//! response indicator is derived from that, never read from a user column.
//! Covariates must be fully observed, so an empty or `NA` covariate cell is
//! a hard error naming the cell. No numeric sentinel is ever treated as
//! missing.

use std::path::Path;

use nmar_gof::{Dataset, Error, Observation, Result};

use crate::config::RunConfig;

/// A header name resolved against the file, or an error listing what exists.
fn resolve(header: &[String], name: &str, role: &str) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| {
        Error::InvalidInput(format!(
            "{role} column '{name}' is not in the CSV header (columns: {})",
            header.join(", ")
        ))
    })
}

/// Parse a covariate or outcome cell, failing with the cell's coordinates.
///
/// `row` is the 1-based data row (the header row does not count).
fn parse_cell(cell: &str, row: usize, col: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        Error::InvalidInput(format!(
            "cannot parse '{}' as a number at data row {row}, column '{col}'",
            cell.trim()
        ))
    })
}

/// Whether a trimmed cell encodes a missing outcome.
fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

/// Read the configured columns of a CSV file into a modeling dataset.
///
/// The covariate matrix is the union of the configured propensity and
/// outcome-model columns, kept in header order; the returned dataset's
/// `prop_cols`/`out_cols` index into that union. The outcome column supplies
/// y and, through its missing cells, the response indicator.
pub fn load_csv(path: &Path, cfg: &RunConfig) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let outcome_idx = resolve(&header, &cfg.outcome_col, "outcome")?;
    for name in &cfg.propensity_cols {
        resolve(&header, name, "propensity")?;
    }
    for name in &cfg.outcome_cols {
        resolve(&header, name, "outcome-model")?;
    }

    // Covariate union in header order, with model index lists into it.
    let mut names: Vec<String> = Vec::new();
    let mut file_idx: Vec<usize> = Vec::new();
    for (i, h) in header.iter().enumerate() {
        let used = cfg.propensity_cols.iter().any(|c| c == h)
            || cfg.outcome_cols.iter().any(|c| c == h);
        if used {
            names.push(h.clone());
            file_idx.push(i);
        }
    }
    let pos_of = |name: &String| names.iter().position(|n| n == name).unwrap();
    let prop_cols: Vec<usize> = cfg.propensity_cols.iter().map(pos_of).collect();
    let out_cols: Vec<usize> = cfg.outcome_cols.iter().map(pos_of).collect();

    let mut rows: Vec<Observation> = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let row = ri + 1;
        let record =
            record.map_err(|e| Error::InvalidInput(format!("cannot read data row {row}: {e}")))?;
        let cell = |i: usize, col: &str| -> Result<&str> {
            record.get(i).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "data row {row} has {} fields; column '{col}' is out of range",
                    record.len()
                ))
            })
        };
        let mut x = Vec::with_capacity(names.len());
        for (j, &fi) in file_idx.iter().enumerate() {
            let raw = cell(fi, &names[j])?;
            if is_missing(raw) {
                return Err(Error::InvalidInput(format!(
                    "covariate '{}' is missing at data row {row}; covariates must be fully observed",
                    names[j]
                )));
            }
            x.push(parse_cell(raw, row, &names[j])?);
        }
        let raw_y = cell(outcome_idx, &cfg.outcome_col)?;
        let y = if is_missing(raw_y) {
            None
        } else {
            Some(parse_cell(raw_y, row, &cfg.outcome_col)?)
        };
        rows.push(Observation { x, y });
    }

    Dataset::new(rows, prop_cols, out_cols, names)
}

/// Write a dataset to CSV in a form `load_csv` reads back exactly.
///
/// Covariate columns come first under the dataset's names, then the outcome
/// column; a missing outcome is written as `NA`. Floating-point cells use
/// the shortest representation that parses back to the identical value, so
/// a write/read round trip reproduces the dataset bit for bit.
pub fn write_csv(data: &Dataset, outcome_col: &str, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", path.display())))?;
    let mut header: Vec<String> = data.names.clone();
    header.push(outcome_col.to_string());
    let io_err = |e: csv::Error| Error::InvalidInput(format!("cannot write {}: {e}", path.display()));
    writer.write_record(&header).map_err(io_err)?;
    for obs in &data.rows {
        let mut record: Vec<String> = obs.x.iter().map(|v| v.to_string()).collect();
        record.push(match obs.y {
            Some(y) => y.to_string(),
            None => "NA".to_string(),
        });
        writer.write_record(&record).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}
