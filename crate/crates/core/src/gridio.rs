//! Grid CSV exchange format shared by the rugosity and abundance outputs.
//!
//! One row per cell, `j` outer and `i` inner, header
//! `i,j,x_center,y_center,value,valid`. No-data cells leave `value` empty.
//! Floats use shortest round-trip formatting so a written grid reads back
//! bit-identically.

use std::fmt::Write;

use crate::error::{Error, Location, Result};
use crate::geom::Grid2D;

pub const GRID_CSV_HEADER: &str = "i,j,x_center,y_center,value,valid";

pub fn write_grid_csv(grid: &Grid2D) -> String {
    let mut s = String::with_capacity(48 * (grid.len() + 1));
    s.push_str(GRID_CSV_HEADER);
    s.push('\n');
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let [x, y] = grid.cell_center(i, j);
            match grid.get(i, j) {
                Some(v) => {
                    let _ = writeln!(s, "{i},{j},{x},{y},{v},1");
                }
                None => {
                    let _ = writeln!(s, "{i},{j},{x},{y},,0");
                }
            }
        }
    }
    s
}

/// Reads a grid CSV back. The cell size is recovered from neighbouring cell
/// centers; a single-cell grid has no neighbours and is given cell size 1.
pub fn parse_grid_csv(text: &str, file: &str) -> Result<Grid2D> {
    let fmt = |line: usize, msg: String| Error::Format {
        file: file.to_string(),
        at: Location::Line(line),
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == GRID_CSV_HEADER => {}
        Some((k, _)) => return Err(fmt(k + 1, format!("expected header `{GRID_CSV_HEADER}`"))),
        None => return Err(fmt(1, "empty grid file".into())),
    }
    struct Row {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        value: Option<f64>,
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 6 {
            return Err(fmt(line_no, format!("expected 6 columns, found {}", f.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| fmt(line_no, format!("`{s}` is not a cell index")));
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fmt(line_no, format!("`{s}` is not a finite number")))
        };
        let valid = match f[5] {
            "1" => true,
            "0" => false,
            other => return Err(fmt(line_no, format!("valid flag `{other}` must be 0 or 1"))),
        };
        let value = if valid { Some(num(f[4])?) } else { None };
        rows.push(Row {
            i: idx(f[0])?,
            j: idx(f[1])?,
            x: num(f[2])?,
            y: num(f[3])?,
            value,
        });
    }
    let nx = rows.iter().map(|r| r.i + 1).max().unwrap_or(0);
    let ny = rows.iter().map(|r| r.j + 1).max().unwrap_or(0);
    if nx * ny != rows.len() {
        return Err(fmt(1, format!("{} rows do not form a full {nx}x{ny} grid", rows.len())));
    }
    let at = |i: usize, j: usize| rows.iter().find(|r| r.i == i && r.j == j);
    let base = at(0, 0).ok_or_else(|| fmt(1, "missing cell (0, 0)".into()))?;
    let cell_size = if nx > 1 {
        at(1, 0).map(|r| r.x - base.x)
    } else if ny > 1 {
        at(0, 1).map(|r| r.y - base.y)
    } else {
        Some(1.0)
    }
    .filter(|c| *c > 0.0)
    .ok_or_else(|| fmt(1, "cannot infer a positive cell size".into()))?;
    let origin = [base.x - 0.5 * cell_size, base.y - 0.5 * cell_size];
    let mut grid = Grid2D::new(origin, cell_size, nx, ny)?;
    let mut seen = vec![false; nx * ny];
    for r in &rows {
        let k = grid.index(r.i, r.j);
        if std::mem::replace(&mut seen[k], true) {
            return Err(fmt(1, format!("cell ({}, {}) appears twice", r.i, r.j)));
        }
        if let Some(v) = r.value {
            grid.set(r.i, r.j, v);
        }
    }
    Ok(grid)
}
