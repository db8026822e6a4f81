//! Field serialization.
//!
//! CSV: header `j1[,j2[,j3]],x1[,x2[,x3]],value`, one row per active point
//! with one-based lattice indices.
//!
//! Binary: one text line `fraclap-field v1 <d> <m> <lo1> <hi1> ... <n_active>`
//! followed by `n_active` little-endian `f64` values in lexicographic order.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{Field, Grid, MAX_DIM};
use crate::{Error, Result};

const MAGIC: &str = "fraclap-field";
const VERSION: &str = "v1";

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stream>", e)
}

pub fn write_field_csv<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let grid = field.grid();
    let d = grid.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("j{k}")).collect();
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.push("value".into());
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (k, v) in field.values().iter().enumerate() {
        let lin = grid.lattice_index(k);
        let idx = grid.multi_index(lin);
        let x = grid.coordinates(lin);
        let mut row: Vec<String> = idx[..d].iter().map(|i| (i + 1).to_string()).collect();
        row.extend(x[..d].iter().map(|c| format!("{c:e}")));
        row.push(format!("{v:e}"));
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Reads a CSV field onto `grid`. Rows may come in any order; every active
/// point must appear exactly once.
pub fn read_field_csv<R: BufRead>(input: R, grid: &Arc<Grid>) -> Result<Field> {
    let d = grid.dim();
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?
        .map_err(io_err)?;
    let ncol = header.split(',').count();
    if ncol != 2 * d + 1 {
        return Err(Error::Parse(format!(
            "header has {ncol} columns, expected {} for d={d}",
            2 * d + 1
        )));
    }
    let mut values = vec![f64::NAN; grid.n_active()];
    let mut seen = vec![false; grid.n_active()];
    for (row, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != ncol {
            return Err(Error::Parse(format!("row {} has {} columns", row + 2, cols.len())));
        }
        let mut idx = [0usize; MAX_DIM];
        for k in 0..d {
            let j: usize = cols[k]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index {:?} in row {}", cols[k], row + 2)))?;
            if j == 0 || j > grid.m() {
                return Err(Error::Parse(format!("index {j} out of range in row {}", row + 2)));
            }
            idx[k] = j - 1;
        }
        let v: f64 = cols[2 * d]
            .parse()
            .map_err(|_| Error::Parse(format!("bad value {:?} in row {}", cols[2 * d], row + 2)))?;
        let pos = grid
            .active_position(grid.linear_index(&idx))
            .ok_or_else(|| Error::Parse(format!("row {} names an inactive point", row + 2)))?;
        if seen[pos] {
            return Err(Error::Parse(format!("point {:?} listed twice", &idx[..d])));
        }
        seen[pos] = true;
        values[pos] = v;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::Parse(format!(
            "active point {missing} missing from field file"
        )));
    }
    Field::new(grid.clone(), values)
}

pub fn write_field_binary<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let grid = field.grid();
    let mut header = format!("{MAGIC} {VERSION} {} {}", grid.dim(), grid.m());
    for (lo, hi) in grid.bounds() {
        header.push_str(&format!(" {lo:e} {hi:e}"));
    }
    header.push_str(&format!(" {}\n", grid.n_active()));
    out.write_all(header.as_bytes()).map_err(io_err)?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

/// Reads a binary field and checks its header against `grid`.
pub fn read_field_binary<R: BufRead>(mut input: R, grid: &Arc<Grid>) -> Result<Field> {
    let mut header = String::new();
    input.read_line(&mut header).map_err(io_err)?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 4 || tokens[0] != MAGIC || tokens[1] != VERSION {
        return Err(Error::Parse(format!("not a {MAGIC} {VERSION} file")));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad integer {s:?} in header")))
    };
    let d = parse_usize(tokens[2])?;
    let m = parse_usize(tokens[3])?;
    if tokens.len() != 5 + 2 * d {
        return Err(Error::Parse("header length does not match dimension".into()));
    }
    let n_active = parse_usize(tokens[4 + 2 * d])?;
    if d != grid.dim() || m != grid.m() || n_active != grid.n_active() {
        return Err(Error::Dimension(format!(
            "file holds d={d} m={m} n_active={n_active}, grid is d={} m={} n_active={}",
            grid.dim(),
            grid.m(),
            grid.n_active()
        )));
    }
    for (k, (lo, hi)) in grid.bounds().into_iter().enumerate() {
        let flo: f64 = tokens[4 + 2 * k]
            .parse()
            .map_err(|_| Error::Parse("bad box bound".into()))?;
        let fhi: f64 = tokens[5 + 2 * k]
            .parse()
            .map_err(|_| Error::Parse("bad box bound".into()))?;
        if flo != lo || fhi != hi {
            return Err(Error::Dimension(format!("box mismatch on axis {k}")));
        }
    }
    let mut bytes = vec![0u8; 8 * n_active];
    input.read_exact(&mut bytes).map_err(io_err)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Field::new(grid.clone(), values)
}
