//! `.stokes.csv` texture files: header `i,j,x,xp,sx,sy,sz,s0,defined`, one
//! row per grid point in row-major order, floats with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::StokesField;
use crate::qstate::ModeGrid;
use crate::{Error, Result};

pub const HEADER: &str = "i,j,x,xp,sx,sy,sz,s0,defined";

/// Renders the field as CSV text.
pub fn to_csv_string(field: &StokesField) -> String {
    let m = field.m();
    let x = field.grid.points();
    let mut out = String::with_capacity(m * m * 140);
    out.push_str(HEADER);
    out.push('\n');
    for i in 0..m {
        for j in 0..m {
            let k = i * m + j;
            writeln!(
                out,
                "{i},{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                x[i],
                x[j],
                field.sx[k],
                field.sy[k],
                field.sz[k],
                field.s0[k],
                field.defined[k] as u8
            )
            .expect("write to string");
        }
    }
    out
}

pub fn write_csv(field: &StokesField, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(field))?;
    Ok(())
}

/// Parses CSV text; the grid is recovered from the row count and the first `x`.
pub fn from_csv_str(text: &str) -> Result<StokesField> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        _ => return Err(Error::Parse("missing or unexpected texture header".into())),
    }
    let mut rows: Vec<[f64; 6]> = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(Error::Parse(format!("line {}: expected 9 columns", n + 2)));
        }
        let mut v = [0.0; 6];
        for (slot, c) in v.iter_mut().zip(&cols[2..8]) {
            *slot = c
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        }
        rows.push(v);
    }
    let m = (rows.len() as f64).sqrt().round() as usize;
    if m * m != rows.len() || m < 3 {
        return Err(Error::Parse(format!(
            "{} rows do not form a square grid",
            rows.len()
        )));
    }
    let grid = ModeGrid::new(m, -rows[0][0])?;
    let sx = rows.iter().map(|r| r[2]).collect();
    let sy = rows.iter().map(|r| r[3]).collect();
    let sz = rows.iter().map(|r| r[4]).collect();
    StokesField::from_components(grid, sx, sy, sz)
}

pub fn read_csv(path: &Path) -> Result<StokesField> {
    from_csv_str(&std::fs::read_to_string(path)?)
}
