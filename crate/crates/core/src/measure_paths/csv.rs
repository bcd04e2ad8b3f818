//! Canonical trajectory interchange: `component,i,t,x,value`, one row per grid node.
//!
//! Fields write every `(i, t_k, x_j)` node; vector paths write `x = inf`.
//! Values carry 17 significant digits so that a round trip is exact.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{Grid, GriddedMeasurePath, VecPath};
use crate::error::{Error, Result};

pub const HEADER: &str = "component,i,t,x,value";

/// A named series, borrowed for export.
pub enum SeriesRef<'a> {
    Field(&'a GriddedMeasurePath),
    Vector(&'a VecPath),
}

/// A named series, owned after import.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Field(GriddedMeasurePath),
    Vector(VecPath),
}

impl Series {
    pub fn as_field(&self) -> Option<&GriddedMeasurePath> {
        match self {
            Series::Field(f) => Some(f),
            Series::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&VecPath> {
        match self {
            Series::Vector(v) => Some(v),
            Series::Field(_) => None,
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_series<W: Write>(out: &mut W, items: &[(&str, SeriesRef<'_>)]) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    for (name, s) in items {
        if name.contains(',') {
            return Err(Error::Config(format!("component name {name:?} contains a comma")));
        }
        match s {
            SeriesRef::Field(p) => {
                let g = p.grid();
                for i in 0..p.comps() {
                    for k in 0..=g.n_t {
                        let t = fmt(g.t(k));
                        for (j, v) in p.row(i, k).iter().enumerate() {
                            writeln!(out, "{name},{i},{t},{},{}", fmt(g.x(j)), fmt(*v))?;
                        }
                    }
                }
            }
            SeriesRef::Vector(p) => {
                let g = p.grid();
                for i in 0..p.comps() {
                    for k in 0..=g.n_t {
                        writeln!(out, "{name},{i},{},inf,{}", fmt(g.t(k)), fmt(p.get(i, k)))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reads a trajectory file written on `grid`. Node coordinates are mapped back to indices
/// and must land on the grid.
pub fn read_series<R: BufRead>(input: R, grid: &Grid) -> Result<BTreeMap<String, Series>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))??;
    if header.trim() != HEADER {
        return Err(Error::Parse(format!("line 1: expected header {HEADER:?}, got {header:?}")));
    }
    // name -> (is_vector, comps seen, values keyed by (i, k, j))
    let mut raw: BTreeMap<String, (bool, BTreeMap<(usize, usize, usize), f64>)> = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Parse(format!("line {lineno}: expected 5 columns, got {}", cols.len())));
        }
        let bad = |what: &str| Error::Parse(format!("line {lineno}: invalid {what}"));
        let i: usize = cols[1].trim().parse().map_err(|_| bad("component index"))?;
        let t: f64 = cols[2].trim().parse().map_err(|_| bad("time"))?;
        let value: f64 = cols[4].trim().parse().map_err(|_| bad("value"))?;
        let k = node_index(t, grid.dt(), grid.n_t).ok_or_else(|| bad("time (off grid)"))?;
        let (is_vec, j) = if cols[3].trim() == "inf" {
            (true, 0)
        } else {
            let x: f64 = cols[3].trim().parse().map_err(|_| bad("deadline"))?;
            (false, node_index(x, grid.dx(), grid.n_x).ok_or_else(|| bad("deadline (off grid)"))?)
        };
        let entry = raw.entry(cols[0].to_string()).or_insert_with(|| (is_vec, BTreeMap::new()));
        if entry.0 != is_vec {
            return Err(Error::Parse(format!("line {lineno}: component {} mixes field and vector rows", cols[0])));
        }
        entry.1.insert((i, k, j), value);
    }

    let mut out = BTreeMap::new();
    for (name, (is_vec, vals)) in raw {
        let comps = vals.keys().map(|(i, _, _)| i + 1).max().unwrap_or(0);
        let expected = comps * (grid.n_t + 1) * if is_vec { 1 } else { grid.n_x + 1 };
        if vals.len() != expected {
            return Err(Error::Parse(format!(
                "component {name}: expected {expected} rows for the grid, found {}",
                vals.len()
            )));
        }
        let series = if is_vec {
            let mut p = VecPath::zeros(*grid, comps);
            for ((i, k, _), v) in vals {
                p.set(i, k, v);
            }
            Series::Vector(p)
        } else {
            let mut p = GriddedMeasurePath::zeros(*grid, comps);
            for ((i, k, j), v) in vals {
                p.set(i, k, j, v);
            }
            Series::Field(p)
        };
        out.insert(name, series);
    }
    Ok(out)
}

fn node_index(v: f64, step: f64, n: usize) -> Option<usize> {
    let r = v / step;
    let idx = r.round();
    if idx < 0.0 || idx > n as f64 || (r - idx).abs() > 1e-6 {
        return None;
    }
    Some(idx as usize)
}
