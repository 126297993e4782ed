//! Path and table serialisation.
//!
//! Paths are written either as CSV (`t,x1,...,xd`) or as a binary block: an
//! 8-byte little-endian header length, a JSON header, then the points of every
//! path as little-endian `f64`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rough::GridPath;

/// Float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_path_csv<W: Write>(path: &GridPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for j in 0..path.n_points() {
        let mut row = vec![fmt_f64(path.time(j))];
        row.extend(path.point(j).iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(input: R) -> Result<GridPath> {
    let mut r = csv::Reader::from_reader(input);
    let dim = r.headers()?.len().checked_sub(1).filter(|d| *d > 0).ok_or_else(|| Error::InvalidPath("csv needs t and at least one coordinate".into()))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parsed: Vec<f64> = rec.iter().map(|f| f.trim().parse::<f64>().map_err(|e| Error::InvalidPath(e.to_string()))).collect::<Result<_>>()?;
        if parsed.len() != dim + 1 {
            return Err(Error::InvalidPath("ragged csv row".into()));
        }
        times.push(parsed[0]);
        values.extend_from_slice(&parsed[1..]);
    }
    let steps = times.len().saturating_sub(1);
    if steps == 0 || !steps.is_power_of_two() {
        return Err(Error::InvalidPath(format!("{} rows do not form a dyadic grid", times.len())));
    }
    let p = GridPath::new((times[0], times[steps]), steps.trailing_zeros(), dim, values)?;
    for (j, t) in times.iter().enumerate() {
        if (p.time(j) - t).abs() > 1e-12 * (1.0 + t.abs()) {
            return Err(Error::InvalidPath(format!("row {j} time {t} off the uniform grid")));
        }
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryHeader {
    pub format: String,
    pub dim: usize,
    pub level: u32,
    pub interval: (f64, f64),
    pub count: usize,
}

const FORMAT: &str = "gridpath-f64le";

pub fn write_paths_binary<W: Write>(paths: &[GridPath], mut out: W) -> Result<()> {
    let first = paths.first().ok_or_else(|| Error::InvalidPath("no paths to write".into()))?;
    if paths.iter().any(|p| p.dim() != first.dim() || p.level() != first.level() || p.interval() != first.interval()) {
        return Err(Error::InvalidPath("binary block needs paths on a common grid".into()));
    }
    let header = BinaryHeader { format: FORMAT.into(), dim: first.dim(), level: first.level(), interval: first.interval(), count: paths.len() };
    let h = serde_json::to_vec(&header)?;
    out.write_all(&(h.len() as u64).to_le_bytes())?;
    out.write_all(&h)?;
    for p in paths {
        for v in p.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_paths_binary<R: Read>(mut input: R) -> Result<(BinaryHeader, Vec<GridPath>)> {
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(Error::InvalidPath("header too long".into()));
    }
    let mut h = vec![0u8; len];
    input.read_exact(&mut h)?;
    let header: BinaryHeader = serde_json::from_slice(&h)?;
    if header.format != FORMAT {
        return Err(Error::InvalidPath(format!("unknown format {}", header.format)));
    }
    let per = ((1usize << header.level) + 1) * header.dim;
    let mut buf = [0u8; 8];
    let mut paths = Vec::with_capacity(header.count);
    for _ in 0..header.count {
        let mut v = Vec::with_capacity(per);
        for _ in 0..per {
            input.read_exact(&mut buf)?;
            v.push(f64::from_le_bytes(buf));
        }
        paths.push(GridPath::new(header.interval, header.level, header.dim, v)?);
    }
    Ok((header, paths))
}

/// One row of a current evaluation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub path: usize,
    pub field: String,
    pub s: f64,
    pub t: f64,
    pub value: f64,
}

pub fn write_evaluation_table<W: Write>(rows: &[EvaluationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "field", "s", "t", "value"])?;
    for r in rows {
        w.write_record([r.path.to_string(), r.field.clone(), fmt_f64(r.s), fmt_f64(r.t), fmt_f64(r.value)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a table whose columns are all floats.
pub fn write_float_table<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> GridPath {
        GridPath::from_fn((-1.0, 1.0), 3, 2, |t, x| {
            x[0] = (t * 1.7).sin() / 3.0;
            x[1] = t.exp();
        })
        .unwrap()
    }

    #[test]
    fn csv_roundtrip_bitwise() {
        let p = path();
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        let q = read_path_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        assert!(String::from_utf8(buf).unwrap().starts_with("t,x1,x2\n"));
    }

    #[test]
    fn binary_roundtrip_bitwise() {
        let ps = vec![path(), path().shifted(&[1.0, 2.0])];
        let mut buf = Vec::new();
        write_paths_binary(&ps, &mut buf).unwrap();
        let (h, qs) = read_paths_binary(buf.as_slice()).unwrap();
        assert_eq!(h.count, 2);
        assert_eq!(ps, qs);
        assert!(read_paths_binary(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn csv_rejects_non_dyadic() {
        let s = "t,x1\n0,0\n0.5,1\n1,2\n";
        assert!(read_path_csv(s.as_bytes()).is_ok());
        let s = "t,x1\n0,0\n0.5,1\n0.75,2\n";
        assert!(read_path_csv(s.as_bytes()).is_err());
        let s = "t,x1\n0,0\n0.5,1\n";
        assert!(read_path_csv(s.as_bytes()).is_ok());
        let s = "t,x1\n0,0\n0.3,1\n1,1\n";
        assert!(read_path_csv(s.as_bytes()).is_err());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(1.0 / 3.0).len(), "3.3333333333333331e-1".len());
    }
}
