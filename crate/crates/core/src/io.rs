//! Raw field dumps: one JSON header line followed by little-endian `f64`
//! values in row-major node order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, SpaceTimeFunction};
use crate::measures::DiscreteMeasure;
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub extent: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub measure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

impl DumpHeader {
    pub fn of<T: Real>(grid: &Grid<T>) -> Self {
        Self {
            dim: grid.dim(),
            cells: grid.nodes().to_vec(),
            extent: (0..grid.dim()).map(|k| [grid.lower()[k].to_f64_lossy(), grid.upper()[k].to_f64_lossy()]).collect(),
            measure: false,
            time: None,
        }
    }

    pub fn grid<T: Real>(&self) -> Result<Grid<T>> {
        if self.cells.len() != self.dim || self.extent.len() != self.dim {
            return Err(Error::Format("header dimension does not match cells/extent".into()));
        }
        let lo: Vec<T> = self.extent.iter().map(|e| T::lit(e[0])).collect();
        let hi: Vec<T> = self.extent.iter().map(|e| T::lit(e[1])).collect();
        Grid::new(&lo, &hi, &self.cells)
    }
}

fn write_raw<T: Real>(path: &Path, header: &DumpHeader, values: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for v in values {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump; returns the header and the raw values.
pub fn read_raw(path: &Path) -> Result<(DumpHeader, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: DumpHeader = serde_json::from_str(line.trim_end())?;
    let count: usize = header.cells.iter().product();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * count {
        return Err(Error::Format(format!("expected {} values, found {} bytes", count, bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((header, values))
}

pub fn write_grid_function<T: Real>(path: &Path, f: &GridFunction<T>) -> Result<()> {
    write_raw(path, &DumpHeader::of(f.grid()), f.values())
}

pub fn read_grid_function<T: Real>(path: &Path) -> Result<GridFunction<T>> {
    let (header, values) = read_raw(path)?;
    let grid = header.grid()?;
    GridFunction::new(grid, values.into_iter().map(T::lit).collect())
}

pub fn write_measure<T: Real>(path: &Path, mu: &DiscreteMeasure<T>) -> Result<()> {
    let header = DumpHeader { measure: true, ..DumpHeader::of(mu.grid()) };
    write_raw(path, &header, mu.masses())
}

pub fn read_measure<T: Real>(path: &Path) -> Result<DiscreteMeasure<T>> {
    let (header, values) = read_raw(path)?;
    if !header.measure {
        return Err(Error::Format("dump is not flagged as a measure".into()));
    }
    DiscreteMeasure::new(header.grid()?, values.into_iter().map(T::lit).collect())
}

/// One file per slice: `{stem}-t{k:05}.raw` inside `dir`. Returns the paths.
pub fn write_space_time<T: Real>(dir: &Path, stem: &str, u: &SpaceTimeFunction<T>) -> Result<Vec<PathBuf>> {
    let stg = u.grid();
    let mut paths = Vec::with_capacity(stg.levels());
    for k in 0..stg.levels() {
        let path = dir.join(format!("{stem}-t{k:05}.raw"));
        let header = DumpHeader { time: Some(stg.time(k).to_f64_lossy()), ..DumpHeader::of(stg.spatial()) };
        write_raw(&path, &header, u.slice(k).values())?;
        paths.push(path);
    }
    Ok(paths)
}
