//! Writers for reports, matrices and sample paths.
//!
//! CSV floats use 17 significant digits. Complex matrices are written one row
//! per line with interleaved `re_k,im_k` columns.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use orfgp_core::{CMatrix, Error, Result, SamplePaths, C64};
use serde::Serialize;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|j| (0..m.ncols()).map(|k| m[(j, k)]).collect())
        .collect()
}

/// `row,re_0,im_0,re_1,im_1,...`; `first` is the index of row 0.
pub fn matrix_csv(m: &CMatrix, first: isize) -> String {
    let mut s = String::from("row");
    for k in 0..m.ncols() {
        let _ = write!(s, ",re_{},im_{}", first + k as isize, first + k as isize);
    }
    s.push('\n');
    for j in 0..m.nrows() {
        let _ = write!(s, "{}", first + j as isize);
        for k in 0..m.ncols() {
            let _ = write!(s, ",{},{}", float(m[(j, k)].re), float(m[(j, k)].im));
        }
        s.push('\n');
    }
    s
}

/// Header line plus one line per record of pre-rendered cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// `path,re_0,im_0,...`, one line per path.
pub fn paths_csv(p: &SamplePaths) -> String {
    let mut s = String::from("path");
    for k in 0..p.width() {
        let _ = write!(s, ",re_{k},im_{k}");
    }
    s.push('\n');
    for i in 0..p.paths() {
        let _ = write!(s, "{i}");
        for v in p.path(i) {
            let _ = write!(s, ",{},{}", float(v.re), float(v.im));
        }
        s.push('\n');
    }
    s
}

/// Little-endian `u64 N, u64 n, u64 seed`, then `N (n + 1)` pairs of `f64`.
pub fn paths_binary(p: &SamplePaths) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 16 * p.values().len());
    out.extend_from_slice(&(p.paths() as u64).to_le_bytes());
    out.extend_from_slice(&(p.width().saturating_sub(1) as u64).to_le_bytes());
    out.extend_from_slice(&p.seed().to_le_bytes());
    for v in p.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

#[derive(Serialize)]
struct PathsJson<'a> {
    paths: usize,
    n: usize,
    seed: u64,
    values: Vec<&'a [C64]>,
}

pub fn paths_json(p: &SamplePaths) -> String {
    json(&PathsJson {
        paths: p.paths(),
        n: p.width().saturating_sub(1),
        seed: p.seed(),
        values: (0..p.paths()).map(|i| p.path(i)).collect(),
    })
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    let io = |e: std::io::Error| Error::config("output.path", e.to_string());
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::config("output.path", format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(io)?;
            out.flush().map_err(io)
        }
    }
}
