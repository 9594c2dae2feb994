//! Grid rendering and field files.
//!
//! Occupancy grids are exported as binary 8-bit PGM images, one pixel per
//! cell, darker = more probably occupied: `pixel = round(255 * (1 - p))`
//! with round-half-up, so a uniform 0.5 field renders as 128. Rows are
//! written top-down with the top row being the highest-y grid row.
//!
//! Marginal fields are also saved as a small versioned text format so they
//! can be re-rendered later with `occgrid export`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::MarginalField;
use crate::grid::GridSpec;
use crate::runner::write_atomic;

pub const FIELD_HEADER: &str = "occgrid field v1";

/// PGM bytes for a probability field on a grid.
pub fn pgm_bytes(field: &MarginalField, grid: &GridSpec) -> Result<Vec<u8>> {
    if field.len() != grid.cells() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} cells, grid has {}",
            field.len(),
            grid.cells()
        )));
    }
    let mut out = format!("P5\n{} {}\n255\n", grid.n_x, grid.n_y).into_bytes();
    for row in (0..grid.n_y).rev() {
        for col in 0..grid.n_x {
            let p = field.get(grid.index(row, col));
            out.push((255.0 * (1.0 - p)).round() as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm(field: &MarginalField, grid: &GridSpec, path: &Path) -> Result<()> {
    write_atomic(path, &pgm_bytes(field, grid)?)
}

/// Field text representation: header, dimensions, then one line per grid row
/// (top row first) of space-separated probabilities.
pub fn field_string(field: &MarginalField, grid: &GridSpec) -> Result<String> {
    if field.len() != grid.cells() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} cells, grid has {}",
            field.len(),
            grid.cells()
        )));
    }
    let mut out = format!("{}\n{} {}\n", FIELD_HEADER, grid.n_x, grid.n_y);
    for row in (0..grid.n_y).rev() {
        let line: Vec<String> = (0..grid.n_x)
            .map(|col| format!("{}", field.get(grid.index(row, col))))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_field(field: &MarginalField, grid: &GridSpec, path: &Path) -> Result<()> {
    write_atomic(path, field_string(field, grid)?.as_bytes())
}

/// Parse a field file; returns the declared dimensions and the cell
/// probabilities in grid index order.
pub fn read_field(path: &Path) -> Result<(usize, usize, MarginalField)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let fail = |line: usize, message: String| Error::ScenarioFormat { line, message };

    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(0, "empty field file".into()))?;
    if header.trim() != FIELD_HEADER {
        return Err(fail(1, format!("unrecognized header {:?}", header)));
    }
    let (n, dims) = lines
        .next()
        .ok_or_else(|| fail(1, "missing dimensions".into()))?;
    let mut parts = dims.split_whitespace();
    let n_x: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fail(n + 1, "cannot parse width".into()))?;
    let n_y: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fail(n + 1, "cannot parse height".into()))?;

    let mut probs = vec![0.0f64; n_x * n_y];
    for row in (0..n_y).rev() {
        let (n, line) = lines
            .next()
            .ok_or_else(|| fail(0, "missing field row".into()))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|_| fail(n + 1, format!("cannot parse probability {:?}", s)))
            })
            .collect::<Result<_>>()?;
        if values.len() != n_x {
            return Err(fail(
                n + 1,
                format!("row has {} values, expected {}", values.len(), n_x),
            ));
        }
        for (col, &v) in values.iter().enumerate() {
            probs[row * n_x + col] = v;
        }
    }
    Ok((n_x, n_y, MarginalField::new(probs)?))
}
