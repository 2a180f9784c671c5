//! CSV ingestion and output. Files carry a header row; an empty cell means
//! "missing".

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::data::{is_missing, DataMatrix, Mask, MISSING};
use crate::error::{Error, Result};

/// A fully observed numeric dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub name: String,
    pub source: PathBuf,
    pub columns: Vec<String>,
    pub matrix: DataMatrix,
    pub provenance: String,
}

fn parse_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Header plus numeric cells; empty cells become `NaN`.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if columns.is_empty() {
        return Err(parse_error(path, "no columns"));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            values.push(if cell.is_empty() {
                MISSING
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_error(path, format!("row {i}, column `{}`: `{cell}` is not numeric", columns[j]))
                })?;
                if !v.is_finite() {
                    return Err(parse_error(path, format!("row {i}, column `{}`: non-finite `{cell}`", columns[j])));
                }
                v
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_error(path, "no data rows"));
    }
    let matrix = Array2::from_shape_vec((rows, columns.len()), values)
        .map_err(|e| parse_error(path, e.to_string()))?;
    Ok((columns, matrix))
}

/// Loads a fully observed dataset; any empty cell is rejected with the list
/// of offending (row, column) positions.
pub fn load_csv(path: &Path) -> Result<DatasetRecord> {
    let (columns, matrix) = read_numeric_csv(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let holes: Vec<(usize, usize)> = matrix
        .indexed_iter()
        .filter(|(_, v)| is_missing(**v))
        .map(|(ij, _)| ij)
        .collect();
    if !holes.is_empty() {
        return Err(Error::PreexistingMissing { name, cells: holes });
    }
    Ok(DatasetRecord {
        name,
        source: path.to_path_buf(),
        columns,
        matrix: DataMatrix::new(matrix)?,
        provenance: format!("local CSV {}", path.display()),
    })
}

/// Writes a header and the matrix; `NaN` cells are written empty. Values
/// use the shortest representation that parses back to the same `f64`.
pub fn save_csv(path: &Path, columns: &[String], values: &Array2<f64>) -> Result<()> {
    if columns.len() != values.ncols() {
        return Err(Error::LengthMismatch(columns.len(), values.ncols()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(columns)?;
    for row in values.rows() {
        w.write_record(row.iter().map(|v| if is_missing(*v) { String::new() } else { v.to_string() }))?;
    }
    w.flush()?;
    Ok(())
}

/// Default header `c0, c1, …`.
pub fn default_columns(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("c{j}")).collect()
}

/// Mask as 0/1 cells (1 = observed) under a header.
pub fn save_mask_csv(path: &Path, columns: &[String], mask: &Mask) -> Result<()> {
    let bits = mask.indicator().mapv(|b| if b { 1.0 } else { 0.0 });
    save_csv(path, columns, &bits)
}

pub fn load_mask_csv(path: &Path) -> Result<Mask> {
    let (_, bits) = read_numeric_csv(path)?;
    let mut out = Array2::from_elem(bits.dim(), false);
    for ((i, j), &v) in bits.indexed_iter() {
        out[[i, j]] = match v {
            1.0 => true,
            0.0 => false,
            _ => return Err(parse_error(path, format!("mask cell ({i}, {j}) must be 0 or 1"))),
        };
    }
    Ok(Mask::new(out))
}

/// Datasets from a directory (every `*.csv`, sorted by file name), a
/// manifest (one CSV path per line, relative to the manifest; `#` starts a
/// comment) or a single CSV file.
pub fn load_datasets(path: &Path) -> Result<Vec<DatasetRecord>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        files
    } else if path.extension().is_some_and(|e| e == "csv") {
        vec![path.to_path_buf()]
    } else {
        let base = path.parent().unwrap_or(Path::new("."));
        fs::read_to_string(path)?
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| base.join(l))
            .collect()
    };
    if files.is_empty() {
        return Err(parse_error(path, "no datasets found"));
    }
    files.iter().map(|f| load_csv(f)).collect()
}
