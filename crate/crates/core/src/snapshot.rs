//! `WSFLD1` binary field snapshots: magic, `u32` n, `f64` box length, then
//! `n^3` interleaved `(re, im)` `f64` pairs in x-fastest order, all little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::grid::SpectralGrid;

pub const MAGIC: &[u8; 6] = b"WSFLD1";

pub fn write_snapshot<W: Write>(mut w: W, f: &Field) -> std::io::Result<()> {
    let p = f.physical();
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.n_points() as u32).to_le_bytes())?;
    w.write_all(&g.box_length().to_le_bytes())?;
    for v in p.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_snapshot<R: Read>(mut r: R) -> std::result::Result<Field, String> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(|e| e.to_string())?;
    if &magic != MAGIC {
        return Err("bad magic bytes".into());
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4).map_err(|e| e.to_string())?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8).map_err(|e| e.to_string())?;
    let box_length = f64::from_le_bytes(b8);
    let grid = SpectralGrid::new(n, box_length).map_err(|e| e.to_string())?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut b8).map_err(|e| format!("truncated data: {e}"))?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8).map_err(|e| format!("truncated data: {e}"))?;
        values.push(Complex64::new(re, f64::from_le_bytes(b8)));
    }
    if r.read(&mut b8).map_err(|e| e.to_string())? != 0 {
        return Err("trailing bytes after field data".into());
    }
    Field::new(&grid, values, Representation::Physical).map_err(|e| e.to_string())
}

pub fn save(path: &Path, f: &Field) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), f)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Field> {
    let file = File::open(path)?;
    read_snapshot(BufReader::new(file)).map_err(|msg| Error::Snapshot {
        path: path.to_path_buf(),
        msg,
    })
}
