//! File formats.
//!
//! - Matrix CSV: one line per row, `re,im` pairs for each entry.
//! - Matrix binary: 16-byte header (`b"CATM"`, `u32` N, `u32` reserved, four
//!   zero padding bytes), then `N * N` entries row-major as little-endian
//!   `f64` pairs `re, im`.
//! - Record CSV/JSON for scans, dispersive norms and profiles.

use std::io::{self, Read, Write};

use faer::{c64, MatRef};
use serde::Serialize;

use crate::experiments::{DispersiveRecord, Profile, Row, ScanRecord};
use crate::linalg::CMat;

pub const MAGIC: &[u8; 4] = b"CATM";
pub const HEADER_LEN: usize = 16;

pub const SCAN_HEADER: [&str; 9] =
    ["N", "n_N", "max_supnorm", "lower_env", "upper_env", "trivial_lb", "is_bdb", "witness_index", "cluster_dim"];
pub const DISPERSIVE_HEADER: [&str; 4] = ["N", "j", "norm_1_inf", "bound"];
pub const PROFILE_HEADER: [&str; 2] = ["i", "abs_u_i"];

pub fn write_matrix_csv<W: Write>(mut w: W, m: MatRef<'_, c64>) -> io::Result<()> {
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            let z = m[(i, j)];
            line.push_str(&format!("{},{}", z.re, z.im));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_matrix_binary<W: Write>(mut w: W, m: MatRef<'_, c64>) -> io::Result<()> {
    let n = u32::try_from(m.nrows()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension too large"))?;
    if m.ncols() != m.nrows() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "matrix must be square"));
    }
    w.write_all(MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&[0u8; HEADER_LEN - 8])?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        buf.clear();
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> io::Result<CMat> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let mut data = vec![0u8; 16 * n * n];
    r.read_exact(&mut data)?;
    let f = |k: usize| f64::from_le_bytes(data[8 * k..8 * k + 8].try_into().unwrap());
    Ok(CMat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        c64::new(f(k), f(k + 1))
    }))
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_rows<W: Write, T: Serialize>(w: W, header: &[&str], rows: &[Row<T>]) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for row in rows {
        match row {
            Row::Ok(rec) => out.serialize(rec).map_err(csv_err)?,
            Row::Failed(f) => {
                let mut fields = vec![f.N.to_string()];
                fields.resize(header.len(), String::new());
                out.write_record(&fields).map_err(csv_err)?;
            }
        }
    }
    out.flush()
}

/// Scan CSV; failed rows keep `N` and leave every other field empty.
pub fn write_scan_csv<W: Write>(w: W, rows: &[Row<ScanRecord>]) -> io::Result<()> {
    write_rows(w, &SCAN_HEADER, rows)
}

pub fn write_dispersive_csv<W: Write>(w: W, rows: &[Row<DispersiveRecord>]) -> io::Result<()> {
    write_rows(w, &DISPERSIVE_HEADER, rows)
}

pub fn write_profile_csv<W: Write>(w: W, profile: &Profile) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PROFILE_HEADER).map_err(csv_err)?;
    for (i, v) in profile.abs_u.iter().enumerate() {
        out.serialize((i, v)).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(w: W, value: &T) -> io::Result<()> {
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::other)?;
    w.write_all(b"\n")
}

/// Reads scan records back from CSV, skipping failed rows.
pub fn read_scan_csv<R: Read>(r: R) -> io::Result<Vec<ScanRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.get(1).is_none_or(str::is_empty) {
            continue;
        }
        let field = |k: usize| rec.get(k).unwrap_or("");
        let bad = |k: usize| io::Error::new(io::ErrorKind::InvalidData, format!("bad field {}", SCAN_HEADER[k]));
        let float = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        let int = |k: usize| field(k).parse::<usize>().map_err(|_| bad(k));
        out.push(ScanRecord {
            N: int(0)?,
            n_N: field(1).parse().map_err(|_| bad(1))?,
            max_supnorm: float(2)?,
            lower_env: float(3)?,
            upper_env: float(4)?,
            trivial_lb: float(5)?,
            is_bdb: field(6).parse().map_err(|_| bad(6))?,
            witness_index: int(7)?,
            cluster_dim: int(8)?,
        });
    }
    Ok(out)
}
