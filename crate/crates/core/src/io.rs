//! On-disk formats: CSV tables for traces, certificates and summaries, and a
//! compact little-endian binary format for fields.
//!
//! Binary field layout:
//!
//! ```text
//! offset  size  content
//! 0       8     magic b"NLKPPFLD"
//! 8       4     format version (u32, currently 1)
//! 12      4     reserved, zero
//! 16      4     dim (u32)
//! ..      4·d   per-axis node counts (u32)
//! ..      16·d  per-axis extents (lo, hi as f64)
//! ..      8·N   node values (f64, row-major)
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Trace, TraceRow};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::{KernelProfile, PositivityCertificate};

pub const FIELD_MAGIC: &[u8; 8] = b"NLKPPFLD";
pub const FIELD_FORMAT_VERSION: u32 = 1;

/// Column order of `trace.csv`.
pub const TRACE_COLUMNS: [&str; 9] = [
    "t",
    "V",
    "D_total",
    "D_grad",
    "D_kernel",
    "sup_dist_one",
    "mass",
    "min_u",
    "dt_used",
];

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    write_csv(path, trace.rows())
}

/// Reads `trace.csv`; the column header must match [`TRACE_COLUMNS`] exactly.
pub fn read_trace_csv(path: &Path) -> Result<Trace> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_COLUMNS {
        return Err(Error::Format {
            path: path.to_owned(),
            reason: format!("unexpected trace header {header:?}"),
        });
    }
    let rows: Vec<TraceRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, csv::Error>>()?;
    Trace::from_rows(rows)
}

/// One row of `certificate.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub method: String,
    pub verdict: String,
    pub witness: f64,
    pub tolerance: f64,
    pub grid_n: usize,
    pub kernel_family: String,
    pub sigma: Option<f64>,
}

impl CertificateRecord {
    pub fn new(cert: &PositivityCertificate, profile: Option<&KernelProfile>) -> Self {
        CertificateRecord {
            method: cert.method.as_str().into(),
            verdict: cert.verdict.as_str().into(),
            witness: cert.witness,
            tolerance: cert.tolerance,
            grid_n: cert.grid_n,
            kernel_family: profile.map_or("custom".into(), |p| p.family().to_string()),
            sigma: profile.map(|p| p.sigma()),
        }
    }
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let d = grid.dim();
    let mut out = Vec::with_capacity(20 + 20 * d + 8 * field.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for &n in grid.counts() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &(lo, hi) in grid.extents() {
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let chunk = self.bytes.get(self.pos..self.pos + N)?;
        self.pos += N;
        chunk.try_into().ok()
    }

    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

pub fn decode_field(bytes: &[u8]) -> std::result::Result<Field, String> {
    let mut c = Cursor { bytes, pos: 0 };
    let truncated = || "file is truncated".to_string();
    let magic = c.take::<8>().ok_or_else(truncated)?;
    if &magic != FIELD_MAGIC {
        return Err("bad magic".into());
    }
    let version = c.u32().ok_or_else(truncated)?;
    if version != FIELD_FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    c.u32().ok_or_else(truncated)?;
    let dim = c.u32().ok_or_else(truncated)? as usize;
    if !(1..=2).contains(&dim) {
        return Err(format!("unsupported dimension {dim}"));
    }
    let counts: Vec<usize> = (0..dim)
        .map(|_| c.u32().map(|n| n as usize))
        .collect::<Option<_>>()
        .ok_or_else(truncated)?;
    let extents: Vec<(f64, f64)> = (0..dim)
        .map(|_| Some((c.f64()?, c.f64()?)))
        .collect::<Option<_>>()
        .ok_or_else(truncated)?;
    let grid = Grid::uniform(&extents, &counts).map_err(|e| e.to_string())?;
    let values: Vec<f64> = (0..grid.len())
        .map(|_| c.f64())
        .collect::<Option<_>>()
        .ok_or_else(truncated)?;
    if c.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - c.pos));
    }
    Field::new(&grid, values).map_err(|e| e.to_string())
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let bytes = fs::read(path)?;
    decode_field(&bytes).map_err(|reason| Error::Format {
        path: path.to_owned(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_header_layout() {
        let g = Grid::rectangle((0.0, 1.0), (-1.0, 2.0), (3, 4)).unwrap();
        let f = Field::from_fn(&g, |p| p[0] - p[1]);
        let bytes = encode_field(&f);
        assert_eq!(&bytes[..8], b"NLKPPFLD");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 1.0);
        assert_eq!(bytes.len(), 16 + 4 + 8 + 32 + 8 * 12);
        assert_eq!(decode_field(&bytes).unwrap(), f);
    }

    #[test]
    fn corrupt_fields_are_rejected() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        let bytes = encode_field(&Field::constant(&g, 1.0));
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_field(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode_field(&long).is_err());
    }
}
